#ifndef WSSR_TRACE_HPP
#define WSSR_TRACE_HPP
//
// Per-step trace records, CSV emission and trailing-window smoothing.
//

#include <wssr/error.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace wssr {

struct TraceRecord {
    std::uint64_t step = 0;
    double raw_energy = 0.0;
    double clipped_energy = 0.0;
    double energy_variance = 0.0;
    double acceptance_rate = 0.0;
    std::uint64_t effective_rank = 0;
    std::uint64_t r_max = 0;
    std::uint64_t ssi_iterations = 0;
    double sigma_drift = std::numeric_limits<double>::quiet_NaN();
    double projector_drift = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
};

inline constexpr const char* trace_header =
    "step,raw_energy,clipped_energy,energy_variance,acceptance_rate,effective_rank,r_max,"
    "ssi_iterations,sigma_drift,projector_drift,wall_ms";

// shortest 17-significant-digit form; nan / inf spelled out
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv_row(const TraceRecord& r)
{
    std::string s;
    s += std::to_string(r.step) + ',';
    s += format_double(r.raw_energy) + ',';
    s += format_double(r.clipped_energy) + ',';
    s += format_double(r.energy_variance) + ',';
    s += format_double(r.acceptance_rate) + ',';
    s += std::to_string(r.effective_rank) + ',';
    s += std::to_string(r.r_max) + ',';
    s += std::to_string(r.ssi_iterations) + ',';
    s += format_double(r.sigma_drift) + ',';
    s += format_double(r.projector_drift) + ',';
    s += format_double(r.wall_ms);
    return s;
}

inline void write_trace(std::ostream& out, std::span<const TraceRecord> records)
{
    out << trace_header << '\n';
    for (const auto& r : records)
        out << to_csv_row(r) << '\n';
}

//
// trailing moving average: out[t] = mean(x[max(0, t - w + 1) .. t])
//
inline std::vector<double> smooth_trace(std::span<const double> energies, std::size_t window)
{
    if (window == 0)
        throw Error(ErrorCode::InvalidArgument, "smoothing window must be >= 1");
    std::vector<double> out(energies.size());
    for (std::size_t t = 0; t < energies.size(); ++t) {
        const std::size_t lo = t + 1 > window ? t + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t i = lo; i <= t; ++i)
            sum += energies[i];
        out[t] = sum / static_cast<double>(t + 1 - lo);
    }
    return out;
}

} // namespace wssr

#endif
