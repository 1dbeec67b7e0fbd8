#ifndef WSSR_CHECKPOINT_HPP
#define WSSR_CHECKPOINT_HPP
//
// Binary checkpoints: "WSSR" magic, u32 version, little-endian payload, CRC32
// trailer over everything before it.
//

#include <wssr/optimizers.hpp>
#include <wssr/sampler.hpp>
#include <wssr/trace.hpp>

#include <boost/crc.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace wssr {

inline constexpr std::uint32_t checkpoint_version = 1;

struct RunState {
    std::uint64_t step = 0; // completed optimizer steps
    Vector theta;
    WssrState wssr;
    SpringState spring;
    WalkerEnsemble ensemble;
    std::vector<TraceRecord> trace;
};

namespace ckpt {

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s)
    {
        u64(s.size());
        bytes_ += s;
    }
    void vec(std::span<const double> v)
    {
        u64(v.size());
        for (double x : v)
            f64(x);
    }
    void mat(const DenseMatrix& m)
    {
        u64(m.rows());
        u64(m.cols());
        for (double x : m.data())
            f64(x);
    }
    template <class T>
    void text(const T& obj)
    {
        std::ostringstream os;
        os.precision(17);
        os << obj;
        str(os.str());
    }

    std::string& bytes() noexcept { return bytes_; }

private:
    std::string bytes_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes)
        : bytes_(bytes)
    {
    }

    std::uint8_t u8()
    {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32()
    {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64()
    {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str()
    {
        const auto n = u64();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    Vector vec()
    {
        const auto n = u64();
        need(n * 8);
        Vector v(n);
        for (auto& x : v)
            x = f64();
        return v;
    }
    DenseMatrix mat()
    {
        const auto r = u64();
        const auto c = u64();
        need(r * c * 8);
        DenseMatrix m(r, c);
        for (auto& x : m.data())
            x = f64();
        return m;
    }
    template <class T>
    void text(T& obj)
    {
        std::istringstream is(str());
        is >> obj;
        if (is.fail())
            throw Error(ErrorCode::CorruptChecksum, "unreadable stream state in checkpoint");
    }
    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::uint64_t n) const
    {
        if (n > bytes_.size() - pos_)
            throw Error(ErrorCode::CorruptChecksum, "checkpoint payload is truncated");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

inline std::uint32_t crc32(std::string_view bytes)
{
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

} // namespace ckpt

inline std::string encode_checkpoint(const RunState& s)
{
    ckpt::Writer w;
    w.bytes() = "WSSR";
    w.u32(checkpoint_version);
    w.u64(s.step);
    w.vec(s.theta);

    w.mat(s.wssr.Obar);
    w.vec(s.wssr.Lbar);
    w.mat(s.wssr.U_prev);
    w.vec(s.wssr.sigma_prev);
    w.u64(s.wssr.r_max);
    w.u64(s.wssr.step);
    w.vec(s.spring.prev_update);

    const auto& e = s.ensemble;
    w.u64(e.size());
    w.f64(e.proposal_std);
    w.u8(e.burned_in ? 1 : 0);
    w.u64(e.threads);
    for (std::size_t i = 0; i < e.size(); ++i) {
        const auto& x = e.walkers[i];
        w.u64(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            for (double c : x.positions[k])
                w.f64(c);
            w.u8(static_cast<std::uint8_t>(x.spins[k]));
        }
        w.f64(e.log_abs[i]);
        w.u64(e.accepted[i]);
        w.u64(e.proposed[i]);
        w.text(e.rngs[i].engine);
        w.text(e.rngs[i].normal);
        w.text(e.rngs[i].uniform);
    }

    w.u64(s.trace.size());
    for (const auto& r : s.trace) {
        w.u64(r.step);
        w.f64(r.raw_energy);
        w.f64(r.clipped_energy);
        w.f64(r.energy_variance);
        w.f64(r.acceptance_rate);
        w.u64(r.effective_rank);
        w.u64(r.r_max);
        w.u64(r.ssi_iterations);
        w.f64(r.sigma_drift);
        w.f64(r.projector_drift);
        w.f64(r.wall_ms);
    }
    w.u32(ckpt::crc32(w.bytes()));
    return std::move(w.bytes());
}

inline RunState decode_checkpoint(std::string_view bytes)
{
    if (bytes.size() < 12 || bytes.substr(0, 4) != "WSSR")
        throw Error(ErrorCode::CorruptChecksum, "not a checkpoint (bad magic or too short)");
    const auto body = bytes.substr(0, bytes.size() - 4);
    ckpt::Reader head(bytes.substr(4, 4));
    const auto version = head.u32();
    ckpt::Reader tail(bytes.substr(bytes.size() - 4));
    if (tail.u32() != ckpt::crc32(body))
        throw Error(ErrorCode::CorruptChecksum, "checkpoint checksum mismatch");
    if (version != checkpoint_version)
        throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                                    ", expected " + std::to_string(checkpoint_version));

    ckpt::Reader r(body.substr(8));
    RunState s;
    s.step = r.u64();
    s.theta = r.vec();

    s.wssr.Obar = r.mat();
    s.wssr.Lbar = r.vec();
    s.wssr.U_prev = r.mat();
    s.wssr.sigma_prev = r.vec();
    s.wssr.r_max = r.u64();
    s.wssr.step = r.u64();
    s.spring.prev_update = r.vec();

    auto& e = s.ensemble;
    const auto walkers = r.u64();
    e.proposal_std = r.f64();
    e.burned_in = r.u8() != 0;
    e.threads = r.u64();
    for (std::uint64_t i = 0; i < walkers; ++i) {
        ElectronConfiguration x;
        const auto n = r.u64();
        for (std::uint64_t k = 0; k < n; ++k) {
            Vec3 p;
            for (double& c : p)
                c = r.f64();
            x.positions.push_back(p);
            x.spins.push_back(static_cast<Spin>(r.u8()));
        }
        e.walkers.push_back(std::move(x));
        e.log_abs.push_back(r.f64());
        e.accepted.push_back(r.u64());
        e.proposed.push_back(r.u64());
        WalkerRng rng;
        r.text(rng.engine);
        r.text(rng.normal);
        r.text(rng.uniform);
        e.rngs.push_back(std::move(rng));
    }

    const auto records = r.u64();
    for (std::uint64_t i = 0; i < records; ++i) {
        TraceRecord t;
        t.step = r.u64();
        t.raw_energy = r.f64();
        t.clipped_energy = r.f64();
        t.energy_variance = r.f64();
        t.acceptance_rate = r.f64();
        t.effective_rank = r.u64();
        t.r_max = r.u64();
        t.ssi_iterations = r.u64();
        t.sigma_drift = r.f64();
        t.projector_drift = r.f64();
        t.wall_ms = r.f64();
        s.trace.push_back(t);
    }
    if (!r.done())
        throw Error(ErrorCode::CorruptChecksum, "trailing bytes in checkpoint");
    return s;
}

// written to a temporary file, then renamed into place
inline void write_checkpoint(const std::filesystem::path& path, const RunState& s)
{
    const std::string bytes = encode_checkpoint(s);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw Error(ErrorCode::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline RunState read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace wssr

#endif
