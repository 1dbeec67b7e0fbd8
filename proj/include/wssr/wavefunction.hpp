#ifndef WSSR_WAVEFUNCTION_HPP
#define WSSR_WAVEFUNCTION_HPP
//
// Antisymmetric trial wavefunction built from an ACE pooled basis:
//
//   Psi(x) = det[ phi_k(x_i; x_{!=i}) ] * exp(gamma(x))
//
//   phi_k(x_i; x_{!=i}) = sum_nu c^k_nu A~_nu(x_i; x_{!=i})
//   A~_nu(x_i; x_{!=i})  = phi_{nu_0}(x_i) prod_{t>=1} sum_{j!=i} phi_{nu_t}(x_j)
//
// The one-body functions are Slater-type orbitals r^n exp(-zeta r) times real
// solid harmonics centred on the nuclei, each carrying a spin indicator.
//

#include <wssr/linalg.hpp>
#include <wssr/system.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace wssr {

struct LogPsi {
    double log_abs = 0.0;
    int sign = 1; // 0 marks an exact node (log_abs = -inf)
};

struct CoordinateDerivatives {
    std::vector<Vec3> gradients; // grad_{r_i} log|Psi|
    double laplacian_sum = 0.0;  // sum_i lap_{r_i} log|Psi|
};

template <class M>
concept WavefunctionModel = requires(const M& m, const ElectronConfiguration& x) {
    { m.log_psi(x) } -> std::convertible_to<LogPsi>;
};

template <class M>
concept ParameterizedModel = WavefunctionModel<M> &&
    requires(const M& m, M& mm, const ElectronConfiguration& x, std::span<const double> theta) {
        { m.parameter_count() } -> std::convertible_to<std::size_t>;
        { m.parameters() } -> std::convertible_to<std::vector<double>>;
        { m.grad_theta_log_psi(x) } -> std::convertible_to<std::vector<double>>;
        mm.set_parameters(theta);
    };

template <class M>
concept AnalyticCoordinateDerivatives = requires(const M& m, const ElectronConfiguration& x) {
    { m.coordinate_derivatives(x) } -> std::convertible_to<CoordinateDerivatives>;
};

// log|Psi| below this is treated as a node
constexpr double node_log_threshold = -700.0;
constexpr double default_fd_step = 1e-4;

//
// central differences per coordinate: gradient (f+ - f-) / 2h, laplacian (f+ - 2 f0 + f-) / h^2
//
template <WavefunctionModel Model>
CoordinateDerivatives finite_difference_derivatives(const Model& model, const ElectronConfiguration& x,
                                                    double h = default_fd_step)
{
    const double f0 = model.log_psi(x).log_abs;
    if (!(f0 >= node_log_threshold))
        throw Error(ErrorCode::NodeProximity, "log|Psi| = " + std::to_string(f0));

    CoordinateDerivatives out;
    out.gradients.resize(x.size());
    ElectronConfiguration probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int d = 0; d < 3; ++d) {
            const double c = x.positions[i][d];
            probe.positions[i][d] = c + h;
            const double fp = model.log_psi(probe).log_abs;
            probe.positions[i][d] = c - h;
            const double fm = model.log_psi(probe).log_abs;
            probe.positions[i][d] = c;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw Error(ErrorCode::NodeProximity, "finite-difference stencil crosses a node");
            out.gradients[i][d] = (fp - fm) / (2.0 * h);
            out.laplacian_sum += (fp - 2.0 * f0 + fm) / (h * h);
        }
    }
    return out;
}

// analytic provider when the model has one, finite differences otherwise
template <WavefunctionModel Model>
CoordinateDerivatives grad_r_and_laplacian_log_psi(const Model& model, const ElectronConfiguration& x,
                                                   double h = default_fd_step)
{
    if constexpr (AnalyticCoordinateDerivatives<Model>)
        return model.coordinate_derivatives(x);
    else
        return finite_difference_derivatives(model, x, h);
}

//
// Jastrow factor  gamma = sum_{i<j} -c_ij / (1 + r_ij),  c = 1/2 opposite spins, 1/4 same spin
//
inline double jastrow_pair_coefficient(Spin a, Spin b) noexcept { return a == b ? 0.25 : 0.5; }

inline double jastrow(const ElectronConfiguration& x)
{
    double g = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            g -= jastrow_pair_coefficient(x.spins[i], x.spins[j]) /
                 (1.0 + distance(x.positions[i], x.positions[j]));
    return g;
}

//
// one-body basis
//

enum class SpinFactor : int { up = 0, down = 1, either = 2 };

struct Orbital {
    std::size_t center = 0;
    int n = 0;
    int l = 0;
    int m = 0;
    double zeta = 1.0;
    SpinFactor spin = SpinFactor::either;

    int degree() const noexcept { return n + l; }

    friend bool operator==(const Orbital&, const Orbital&) = default;
};

inline bool canonical_less(const Orbital& a, const Orbital& b) noexcept
{
    return std::tuple(a.n, a.l, a.m, static_cast<int>(a.spin), a.zeta, a.center) <
           std::tuple(b.n, b.l, b.m, static_cast<int>(b.spin), b.zeta, b.center);
}

constexpr int max_supported_l = 2;

struct OneBodyBasisSpec {
    std::vector<Orbital> orbitals;

    void canonicalize() { std::stable_sort(orbitals.begin(), orbitals.end(), canonical_less); }

    void validate(std::size_t center_count) const
    {
        if (orbitals.empty())
            throw Error(ErrorCode::InvalidArgument, "basis has no orbitals");
        for (const auto& o : orbitals) {
            if (!(o.zeta > 0.0) || !std::isfinite(o.zeta))
                throw Error(ErrorCode::InvalidArgument, "orbital exponent must be finite and positive");
            if (o.n < 0)
                throw Error(ErrorCode::InvalidArgument, "orbital power n must be >= 0");
            if (o.l < 0 || o.l > max_supported_l || o.m < -o.l || o.m > o.l)
                throw Error(ErrorCode::InvalidArgument, "unsupported angular channel (l, m)");
            if (o.center >= center_count)
                throw Error(ErrorCode::InvalidArgument, "orbital centre index out of range");
        }
    }

    //
    // exponents {Z, Z/2, 1} per nucleus, l <= l_max, n = 0, one copy per spin
    //
    static OneBodyBasisSpec default_for(const MolecularSystem& sys, int l_max = 1)
    {
        OneBodyBasisSpec spec;
        for (std::size_t c = 0; c < sys.nuclei.size(); ++c) {
            const double Z = sys.nuclei[c].charge;
            std::vector<double> zetas;
            for (double z : {Z, Z / 2.0, 1.0})
                if (std::none_of(zetas.begin(), zetas.end(), [z](double w) { return std::abs(w - z) < 1e-12; }))
                    zetas.push_back(z);
            for (double z : zetas)
                for (int l = 0; l <= l_max; ++l)
                    for (int m = -l; m <= l; ++m)
                        for (SpinFactor s : {SpinFactor::up, SpinFactor::down})
                            spec.orbitals.push_back(Orbital{c, 0, l, m, z, s});
        }
        spec.canonicalize();
        return spec;
    }
};

// real solid harmonic (unnormalised) of displacement d
inline double solid_harmonic(int l, int m, const Vec3& d) noexcept
{
    const double x = d[0], y = d[1], z = d[2];
    switch (l) {
    case 0: return 1.0;
    case 1: return m == -1 ? y : (m == 0 ? z : x);
    case 2:
        switch (m) {
        case -2: return x * y;
        case -1: return y * z;
        case 0: return 2.0 * z * z - x * x - y * y;
        case 1: return x * z;
        default: return x * x - y * y;
        }
    default: return 0.0;
    }
}

inline double evaluate_orbital(const Orbital& o, const Vec3& center, const Vec3& r, Spin s) noexcept
{
    if ((o.spin == SpinFactor::up && s != Spin::up) || (o.spin == SpinFactor::down && s != Spin::down))
        return 0.0;
    const Vec3 d{r[0] - center[0], r[1] - center[1], r[2] - center[2]};
    const double rr = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    double radial = std::exp(-o.zeta * rr);
    for (int k = 0; k < o.n; ++k)
        radial *= rr;
    return radial * solid_harmonic(o.l, o.m, d);
}

//
// truncated index set: tuples (nu_0; nu_1 <= ... <= nu_{b-1}) for b = 1..B
// with total degree <= degree_cap, ordered by length then lexicographically
//
using IndexTuple = std::vector<std::uint32_t>;

inline std::vector<IndexTuple> build_index_set(const OneBodyBasisSpec& spec, std::size_t correlation_order,
                                               int degree_cap)
{
    if (correlation_order < 1)
        throw Error(ErrorCode::InvalidArgument, "correlation order must be >= 1");
    const auto K = static_cast<std::uint32_t>(spec.orbitals.size());
    std::vector<IndexTuple> out;
    IndexTuple cur;

    // extends cur with nondecreasing entries >= lo until it reaches `length`
    auto extend = [&](auto&& self, std::size_t length, std::uint32_t lo, int budget) -> void {
        if (cur.size() == length) {
            out.push_back(cur);
            return;
        }
        for (std::uint32_t nu = lo; nu < K; ++nu) {
            const int deg = spec.orbitals[nu].degree();
            if (deg > budget)
                continue;
            cur.push_back(nu);
            self(self, length, nu, budget - deg);
            cur.pop_back();
        }
    };

    for (std::size_t b = 1; b <= correlation_order; ++b)
        for (std::uint32_t nu0 = 0; nu0 < K; ++nu0) {
            const int deg = spec.orbitals[nu0].degree();
            if (deg > degree_cap)
                continue;
            cur.assign(1, nu0);
            extend(extend, b, 0, degree_cap - deg);
        }
    return out;
}

class AceWavefunction {
public:
    AceWavefunction(OneBodyBasisSpec spec, std::vector<Vec3> centers, std::size_t n_up, std::size_t n_down,
                    std::size_t correlation_order, int degree_cap, bool jastrow_enabled = true)
        : spec_(std::move(spec))
        , centers_(std::move(centers))
        , n_up_(n_up)
        , n_down_(n_down)
        , correlation_order_(correlation_order)
        , degree_cap_(degree_cap)
        , jastrow_enabled_(jastrow_enabled)
    {
        spec_.canonicalize();
        spec_.validate(centers_.size());
        if (n_up_ + n_down_ == 0)
            throw Error(ErrorCode::InvalidArgument, "wavefunction needs electrons");
        index_set_ = build_index_set(spec_, correlation_order_, degree_cap_);
        if (index_set_.empty())
            throw Error(ErrorCode::InvalidArgument, "degree cap leaves an empty index set");
        theta_.assign(electron_count() * index_set_.size(), 0.0);
    }

    static AceWavefunction for_system(const MolecularSystem& sys, OneBodyBasisSpec spec,
                                      std::size_t correlation_order, int degree_cap, bool jastrow_enabled = true)
    {
        std::vector<Vec3> centers;
        for (const auto& n : sys.nuclei)
            centers.push_back(n.position);
        return AceWavefunction(std::move(spec), std::move(centers), sys.n_up, sys.n_down, correlation_order,
                               degree_cap, jastrow_enabled);
    }

    std::size_t electron_count() const noexcept { return n_up_ + n_down_; }
    std::size_t n_up() const noexcept { return n_up_; }
    std::size_t n_down() const noexcept { return n_down_; }
    std::size_t correlation_order() const noexcept { return correlation_order_; }
    int degree_cap() const noexcept { return degree_cap_; }
    bool jastrow_enabled() const noexcept { return jastrow_enabled_; }
    const OneBodyBasisSpec& spec() const noexcept { return spec_; }
    const std::vector<Vec3>& centers() const noexcept { return centers_; }
    const std::vector<IndexTuple>& index_set() const noexcept { return index_set_; }

    std::size_t parameter_count() const noexcept { return theta_.size(); }
    std::vector<double> parameters() const { return theta_; }

    void set_parameters(std::span<const double> theta)
    {
        if (theta.size() != theta_.size())
            throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
        for (double v : theta)
            if (!std::isfinite(v))
                throw Error(ErrorCode::NonFinite, "parameters must be finite");
        theta_.assign(theta.begin(), theta.end());
    }

    // theta index of coefficient c^k_nu
    std::size_t parameter_index(std::size_t orbital_k, std::size_t tuple) const noexcept
    {
        return orbital_k * index_set_.size() + tuple;
    }

    //
    // Parameters of a near-Slater determinant: column k gets coefficient 1 on the
    // single-particle tuple of its reference orbital, every other coefficient is
    // Gaussian noise of scale `noise`.
    //
    void initialize_near_slater(double noise, std::uint64_t seed)
    {
        std::mt19937_64 engine(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : theta_)
            v = noise * normal(engine);
        const auto refs = reference_orbitals();
        for (std::size_t k = 0; k < refs.size(); ++k) {
            const auto it = std::find(index_set_.begin(), index_set_.end(), IndexTuple{refs[k]});
            theta_[parameter_index(k, static_cast<std::size_t>(it - index_set_.begin()))] = 1.0;
        }
    }

    //
    // Distinct spin-compatible orbitals for the determinant columns, lowest l then
    // steepest exponent first: columns 0..n_up-1 for spin up, the rest spin down.
    //
    std::vector<std::uint32_t> reference_orbitals() const
    {
        std::vector<std::uint32_t> order(spec_.orbitals.size());
        for (std::uint32_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const auto& oa = spec_.orbitals[a];
            const auto& ob = spec_.orbitals[b];
            return std::tuple(oa.l, oa.n, -oa.zeta, oa.m, oa.center) <
                   std::tuple(ob.l, ob.n, -ob.zeta, ob.m, ob.center);
        });
        std::vector<std::uint32_t> refs;
        std::vector<bool> used(spec_.orbitals.size(), false);
        for (std::size_t k = 0; k < electron_count(); ++k) {
            const SpinFactor want = k < n_up_ ? SpinFactor::up : SpinFactor::down;
            bool found = false;
            for (std::uint32_t nu : order) {
                const auto& o = spec_.orbitals[nu];
                const bool in_index = std::find(index_set_.begin(), index_set_.end(), IndexTuple{nu}) !=
                                      index_set_.end();
                if (used[nu] || !in_index || (o.spin != want && o.spin != SpinFactor::either))
                    continue;
                used[nu] = true;
                refs.push_back(nu);
                found = true;
                break;
            }
            if (!found)
                throw Error(ErrorCode::InvalidArgument,
                            "basis has too few spin-compatible orbitals for a reference determinant");
        }
        return refs;
    }

    // phi_nu(x_i) for all electrons, row-major N x K
    std::vector<double> orbital_values(const ElectronConfiguration& x) const
    {
        const std::size_t N = x.size();
        const std::size_t K = spec_.orbitals.size();
        std::vector<double> phi(N * K);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t nu = 0; nu < K; ++nu) {
                const auto& o = spec_.orbitals[nu];
                phi[i * K + nu] = evaluate_orbital(o, centers_[o.center], x.positions[i], x.spins[i]);
            }
        return phi;
    }

    // A~_nu(x_i; x_{!=i}) over the index set
    std::vector<double> pooled_basis(const ElectronConfiguration& x, std::size_t highlighted) const
    {
        if (highlighted >= x.size())
            throw Error(ErrorCode::InvalidArgument, "highlighted electron index out of range");
        const auto phi = orbital_values(x);
        std::vector<double> out(index_set_.size());
        fill_pooled(phi, x.size(), highlighted, out);
        return out;
    }

    LogPsi log_psi(const ElectronConfiguration& x) const
    {
        check_configuration(x);
        const auto A = pooled_matrix(x);
        const linalg::LuFactorization lu(orbital_matrix(A, x.size()));
        if (lu.singular())
            return LogPsi{-std::numeric_limits<double>::infinity(), 0};
        const double gamma = jastrow_enabled_ ? jastrow(x) : 0.0;
        return LogPsi{lu.log_abs_det() + gamma, lu.sign()};
    }

    // orbital matrix M_ik = phi_k(x_i; x_{!=i})
    linalg::DenseMatrix orbital_matrix(const ElectronConfiguration& x) const
    {
        check_configuration(x);
        return orbital_matrix(pooled_matrix(x), x.size());
    }

    //
    // d log|det M| / d c^k_nu = sum_i [M^-1]_{k i} A~_nu(x_i); the Jastrow factor has no parameters
    //
    std::vector<double> grad_theta_log_psi(const ElectronConfiguration& x) const
    {
        check_configuration(x);
        const std::size_t N = x.size();
        const std::size_t T = index_set_.size();
        const auto A = pooled_matrix(x);
        const linalg::LuFactorization lu(orbital_matrix(A, N));
        if (lu.singular() || lu.log_abs_det() < node_log_threshold)
            throw Error(ErrorCode::NodeProximity, "theta gradient requested at a node");
        const auto G = lu.inverse();
        std::vector<double> grad(theta_.size(), 0.0);
        for (std::size_t k = 0; k < N; ++k) {
            double* g = grad.data() + k * T;
            for (std::size_t i = 0; i < N; ++i) {
                const double w = G(k, i);
                const double* a = A.data() + i * T;
                for (std::size_t t = 0; t < T; ++t)
                    g[t] += w * a[t];
            }
        }
        return grad;
    }

private:
    void check_configuration(const ElectronConfiguration& x) const
    {
        if (x.size() != electron_count() || x.spins.size() != x.size())
            throw Error(ErrorCode::InvalidArgument, "configuration does not match the electron count");
    }

    void fill_pooled(const std::vector<double>& phi, std::size_t N, std::size_t i, std::span<double> out) const
    {
        const std::size_t K = spec_.orbitals.size();
        std::vector<double> pooled(K, 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i)
                continue;
            for (std::size_t nu = 0; nu < K; ++nu)
                pooled[nu] += phi[j * K + nu];
        }
        for (std::size_t t = 0; t < index_set_.size(); ++t) {
            const auto& tup = index_set_[t];
            double v = phi[i * K + tup[0]];
            for (std::size_t s = 1; s < tup.size(); ++s)
                v *= pooled[tup[s]];
            out[t] = v;
        }
    }

    // row-major N x T matrix of pooled basis values
    std::vector<double> pooled_matrix(const ElectronConfiguration& x) const
    {
        const std::size_t N = x.size();
        const std::size_t T = index_set_.size();
        const auto phi = orbital_values(x);
        std::vector<double> A(N * T);
        for (std::size_t i = 0; i < N; ++i)
            fill_pooled(phi, N, i, std::span<double>(A.data() + i * T, T));
        return A;
    }

    linalg::DenseMatrix orbital_matrix(const std::vector<double>& A, std::size_t N) const
    {
        const std::size_t T = index_set_.size();
        linalg::DenseMatrix M(N, N);
        for (std::size_t k = 0; k < N; ++k) {
            const double* c = theta_.data() + k * T;
            for (std::size_t i = 0; i < N; ++i) {
                const double* a = A.data() + i * T;
                double s = 0.0;
                for (std::size_t t = 0; t < T; ++t)
                    s += c[t] * a[t];
                M(i, k) = s;
            }
        }
        return M;
    }

    OneBodyBasisSpec spec_;
    std::vector<Vec3> centers_;
    std::size_t n_up_;
    std::size_t n_down_;
    std::size_t correlation_order_;
    int degree_cap_;
    bool jastrow_enabled_;
    std::vector<IndexTuple> index_set_;
    std::vector<double> theta_;
};

} // namespace wssr

#endif
