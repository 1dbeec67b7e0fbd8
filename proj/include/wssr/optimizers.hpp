#ifndef WSSR_OPTIMIZERS_HPP
#define WSSR_OPTIMIZERS_HPP
//
// Parameter updates: SGD, stochastic reconfiguration (shift / scale /
// pseudo-inverse), MinSR, SPRING and the warm-started low-rank SR (WSSR)
// together with its randomized-sketch variant (RSSR).
//

#include <wssr/estimators.hpp>
#include <wssr/svd_engine.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace wssr {

struct LearningRateSchedule {
    double alpha = 0.015;
    double beta = 1000.0;

    void validate() const
    {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw Error(ErrorCode::InvalidArgument, "learning-rate alpha and beta must be positive");
    }

    // eta(k) = alpha / (1 + k / beta)
    double operator()(std::size_t k) const noexcept { return alpha / (1.0 + static_cast<double>(k) / beta); }
};

namespace detail {

inline Vector step(std::span<const double> theta, std::span<const double> direction, double eta)
{
    if (theta.size() != direction.size())
        throw Error(ErrorCode::InvalidArgument, "parameter and direction lengths differ");
    Vector out(theta.begin(), theta.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] -= eta * direction[i];
    return out;
}

} // namespace detail

inline Vector sgd_update(std::span<const double> theta, const EstimatorBundle& bundle, double eta)
{
    return detail::step(theta, bundle.gradient, eta);
}

//
// full SR on the M x M matrix S = O O^T; intended for small M
//
enum class SrRegularization { diagonal_shift, diagonal_scale, pseudo_inverse };

struct SrSettings {
    SrRegularization kind = SrRegularization::pseudo_inverse;
    // shift epsilon, scale epsilon, or relative cutoff eps_tol depending on kind
    double epsilon = 1e-3;
};

// S^+ g for symmetric PSD S, dropping sigma_i < tol * sigma_max
inline Vector pseudo_inverse_apply(const DenseMatrix& S, std::span<const double> g, double tol)
{
    const auto svd = linalg::exact_svd(S);
    const double smax = svd.sigma.empty() ? 0.0 : svd.sigma.front();
    Vector c = linalg::multiply_t(svd.U, g);
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] = (smax > 0.0 && svd.sigma[i] >= tol * smax) ? c[i] / svd.sigma[i] : 0.0;
    return linalg::multiply(svd.U, c);
}

inline Vector sr_direction(const EstimatorBundle& bundle, const SrSettings& settings)
{
    DenseMatrix S = s_matrix(bundle);
    switch (settings.kind) {
    case SrRegularization::pseudo_inverse:
        return pseudo_inverse_apply(S, bundle.gradient, settings.epsilon);
    case SrRegularization::diagonal_shift:
    case SrRegularization::diagonal_scale:
        try {
            double shift = 0.0;
            if (settings.kind == SrRegularization::diagonal_shift)
                shift = settings.epsilon;
            else
                for (std::size_t i = 0; i < S.rows(); ++i)
                    S(i, i) *= 1.0 + settings.epsilon;
            return linalg::spd_solve(S, shift, bundle.gradient);
        }
        catch (const Error& e) {
            if (e.code() == ErrorCode::NotPositiveDefinite)
                throw Error(ErrorCode::SingularMatrix, std::string("regularised S: ") + e.what());
            throw;
        }
    }
    return {};
}

inline Vector full_sr_update(std::span<const double> theta, const EstimatorBundle& bundle, double eta,
                             const SrSettings& settings)
{
    return detail::step(theta, sr_direction(bundle, settings), eta);
}

//
// MinSR: S^-1 g = 2 O T^-1 L with T = O^T O, regularised as T + eps I
//
inline Vector minsr_direction(const EstimatorBundle& bundle, double tikhonov_eps)
{
    const Vector y = linalg::spd_solve(t_matrix(bundle), tikhonov_eps, bundle.L);
    Vector d = linalg::multiply(bundle.O, y);
    for (double& v : d)
        v *= 2.0;
    return d;
}

inline Vector minsr_update(std::span<const double> theta, const EstimatorBundle& bundle, double eta,
                           double tikhonov_eps)
{
    return detail::step(theta, minsr_direction(bundle, tikhonov_eps), eta);
}

//
// SPRING
//
struct SpringSettings {
    double mu = 0.99;
    double tikhonov_eps = 1e-3;
};

struct SpringState {
    Vector prev_update; // theta^(k) - theta^(k-1); empty means zero
};

//
//   L~    = L - mu O^T prev
//   phi   = -eta 2 O (T + eps I + 11^T / N)^-1 L~
//   delta = phi + mu prev
//
inline Vector spring_update(std::span<const double> theta, const EstimatorBundle& bundle, double eta,
                            SpringState& state, const SpringSettings& settings)
{
    const std::size_t M = bundle.parameter_count();
    const std::size_t N = bundle.sample_count();
    if (theta.size() != M)
        throw Error(ErrorCode::InvalidArgument, "parameter length does not match the bundle");
    if (!(settings.mu >= 0.0 && settings.mu < 1.0))
        throw Error(ErrorCode::InvalidArgument, "SPRING mu must lie in [0, 1)");
    if (state.prev_update.empty())
        state.prev_update.assign(M, 0.0);

    Vector ltilde = bundle.L;
    if (settings.mu != 0.0) {
        const Vector proj = linalg::multiply_t(bundle.O, state.prev_update);
        for (std::size_t n = 0; n < N; ++n)
            ltilde[n] -= settings.mu * proj[n];
    }
    DenseMatrix T = t_matrix(bundle);
    const double ones = 1.0 / static_cast<double>(N);
    for (double& v : T.data())
        v += ones;
    const Vector y = linalg::spd_solve(T, settings.tikhonov_eps, ltilde);
    const Vector phi = linalg::multiply(bundle.O, y);

    Vector out(theta.begin(), theta.end());
    Vector delta(M);
    for (std::size_t i = 0; i < M; ++i) {
        delta[i] = -eta * 2.0 * phi[i] + settings.mu * state.prev_update[i];
        out[i] += delta[i];
    }
    state.prev_update = std::move(delta);
    return out;
}

//
// WSSR
//
enum class SvdBackend { ssi, randomized, exact };

struct WssrSettings {
    double delta = 0.95;         // averaging weight
    double sigma_floor = 1e-3;   // S eigenvalue assigned to the orthogonal complement
    bool relative_floor = false; // sigma_floor scaled by the leading S eigenvalue
    double r_reg = 1e-6;         // relative cutoff on S eigenvalues s_i^2 / s_1^2
    std::size_t initial_rank = 400;
    double rank_growth = 0.1;
    std::size_t ssi_max_iters = 3;
    double ssi_tolerance = 1e-10;
    SvdBackend backend = SvdBackend::ssi;
    std::size_t oversample = 10;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!(delta >= 0.0 && delta < 1.0))
            throw Error(ErrorCode::InvalidArgument, "delta must lie in [0, 1)");
        if (!(sigma_floor > 0.0))
            throw Error(ErrorCode::InvalidArgument, "sigma_floor must be positive");
        if (!(r_reg > 0.0 && r_reg < 1.0))
            throw Error(ErrorCode::InvalidArgument, "r_reg must lie in (0, 1)");
        if (initial_rank == 0)
            throw Error(ErrorCode::InvalidArgument, "initial rank must be positive");
        if (!(rank_growth > 0.0))
            throw Error(ErrorCode::InvalidArgument, "rank growth factor must be positive");
        if (ssi_max_iters == 0)
            throw Error(ErrorCode::InvalidArgument, "SSI needs at least one iteration");
    }
};

struct WssrState {
    DenseMatrix Obar; // M x r, equals U_r Sigma_r of the last step
    Vector Lbar;      // r
    DenseMatrix U_prev;
    Vector sigma_prev;
    std::size_t r_max = 0;
    std::size_t step = 0;

    static WssrState initial(std::size_t parameter_count, const WssrSettings& settings)
    {
        WssrState s;
        s.r_max = std::min(settings.initial_rank, parameter_count);
        s.Obar = DenseMatrix(parameter_count, s.r_max);
        s.Lbar.assign(s.r_max, 0.0);
        return s;
    }
};

struct WssrDiagnostics {
    svd::SsiReport ssi;
    std::size_t effective_rank = 0;
    std::size_t r_max = 0;      // rank of the factorisation used this step
    std::size_t next_r_max = 0; // after the growth rule
    double sigma_drift = std::numeric_limits<double>::quiet_NaN();
    double projector_drift = std::numeric_limits<double>::quiet_NaN();
};

// everything the step computes before the parameter update
struct WssrFactorization {
    DenseMatrix Ohat;
    Vector Lhat;
    Vector gbar;
    svd::TruncatedSvd factors;
    svd::SsiReport ssi;
    std::size_t effective_rank = 0;
    std::size_t next_r_max = 0;
};

// r = max{ i <= r_max : s_i^2 >= r_reg s_1^2 }
inline std::size_t effective_rank(std::span<const double> sigma, double r_reg) noexcept
{
    if (sigma.empty() || sigma.front() <= 0.0)
        return 0;
    const double cut = r_reg * sigma.front() * sigma.front();
    std::size_t r = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] * sigma[i] >= cut)
            r = i + 1;
    return r;
}

inline WssrFactorization wssr_factorize(const EstimatorBundle& bundle, const WssrState& state,
                                        const WssrSettings& settings)
{
    const std::size_t M = bundle.parameter_count();
    if (state.Obar.rows() != M)
        throw Error(ErrorCode::InvalidArgument, "WSSR state does not match the parameter count");
    const double wd = std::sqrt(settings.delta);
    const double wn = std::sqrt(1.0 - settings.delta);

    WssrFactorization f;
    f.Ohat = linalg::hconcat(linalg::scaled(state.Obar, wd), linalg::scaled(bundle.O, wn));
    f.Lhat.reserve(state.Lbar.size() + bundle.L.size());
    for (double v : state.Lbar)
        f.Lhat.push_back(wd * v);
    for (double v : bundle.L)
        f.Lhat.push_back(wn * v);
    f.gbar = linalg::multiply(f.Ohat, f.Lhat);
    f.next_r_max = state.r_max;

    if (linalg::frobenius_norm(f.Ohat) == 0.0)
        return f;

    const std::size_t rank = std::min({state.r_max, M, f.Ohat.cols()});
    SvdBackend backend = settings.backend;
    // the first factorisation is always computed accurately
    if (state.step == 0 && backend == SvdBackend::ssi)
        backend = SvdBackend::exact;

    switch (backend) {
    case SvdBackend::exact:
        f.factors = svd::truncated_exact_svd(f.Ohat, rank);
        break;
    case SvdBackend::randomized: {
        const std::size_t room = std::min(M, f.Ohat.cols()) - rank;
        f.factors = svd::randomized_svd(f.Ohat, rank, std::min(settings.oversample, room),
                                        settings.seed + state.step);
        break;
    }
    case SvdBackend::ssi: {
        DenseMatrix guess(M, rank);
        const std::size_t keep = std::min(rank, state.U_prev.cols());
        if (state.U_prev.rows() == M)
            std::copy_n(state.U_prev.data().begin(), keep * M, guess.data().begin());
        svd::SsiOptions opts;
        opts.max_iters = settings.ssi_max_iters;
        opts.tolerance = settings.ssi_tolerance;
        opts.cold_seed = settings.seed;
        if (keep == 0)
            guess = svd::gaussian_matrix(M, rank, settings.seed + state.step);
        auto [factors, report] = svd::ssi_svd(f.Ohat, rank, guess, opts);
        f.factors = std::move(factors);
        f.ssi = report;
        break;
    }
    }

    f.effective_rank = effective_rank(f.factors.sigma, settings.r_reg);
    const double s1 = f.factors.sigma.front();
    const double slast = f.factors.sigma.back();
    if (slast * slast > settings.r_reg * s1 * s1) {
        const auto grown = static_cast<std::size_t>(std::ceil((1.0 + settings.rank_growth) *
                                                              static_cast<double>(state.r_max)));
        f.next_r_max = std::min(std::max(grown, state.r_max + 1), M);
    }
    return f;
}

//
// (U S^-2 U^T + floor^-1 (I - U U^T)) g, applied as two projections
//
inline Vector apply_low_rank_preconditioner(const DenseMatrix& U, std::span<const double> sigma, double floor,
                                            std::span<const double> g)
{
    const Vector c = linalg::multiply_t(U, g);
    Vector scaled_c(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        scaled_c[i] = c[i] / (sigma[i] * sigma[i]);
    Vector out = linalg::multiply(U, scaled_c);
    const Vector in_span = linalg::multiply(U, c);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] += (g[i] - in_span[i]) / floor;
    return out;
}

struct WssrStepResult {
    Vector theta;
    WssrDiagnostics diagnostics;
};

inline WssrStepResult wssr_step(std::span<const double> theta, const EstimatorBundle& bundle, double eta,
                                WssrState& state, const WssrSettings& settings)
{
    settings.validate();
    if (theta.size() != bundle.parameter_count())
        throw Error(ErrorCode::InvalidArgument, "parameter length does not match the bundle");
    if (state.Obar.empty() && state.step == 0)
        state = WssrState::initial(bundle.parameter_count(), settings);

    WssrFactorization f = wssr_factorize(bundle, state, settings);
    WssrStepResult out;
    out.theta.assign(theta.begin(), theta.end());
    out.diagnostics.ssi = f.ssi;
    out.diagnostics.r_max = f.factors.rank();
    out.diagnostics.next_r_max = f.next_r_max;
    out.diagnostics.effective_rank = f.effective_rank;

    if (f.factors.rank() == 0) {
        // zero Ohat: nothing to precondition, nothing to move
        ++state.step;
        return out;
    }
    const std::size_t r = f.effective_rank;
    if (r == 0)
        throw Error(ErrorCode::RankCollapse, "no singular value passed the cutoff");

    // drift of the retained (effective-rank) subspace
    const std::size_t r_prev = state.Lbar.size();
    if (state.step > 0 && state.U_prev.cols() > 0 && r_prev > 0) {
        const std::size_t k = std::min(r_prev, r);
        svd::TruncatedSvd prev{linalg::columns(state.U_prev, 0, k),
                               Vector(state.sigma_prev.begin(), state.sigma_prev.begin() + static_cast<std::ptrdiff_t>(k)),
                               {}};
        svd::TruncatedSvd curr{linalg::columns(f.factors.U, 0, k),
                               Vector(f.factors.sigma.begin(), f.factors.sigma.begin() + static_cast<std::ptrdiff_t>(k)),
                               {}};
        const auto d = svd::subspace_drift(prev, curr);
        out.diagnostics.sigma_drift = d.sigma_drift;
        out.diagnostics.projector_drift = d.projector_drift;
    }

    const DenseMatrix Ur = linalg::columns(f.factors.U, 0, r);
    const std::span<const double> sr(f.factors.sigma.data(), r);
    const double s1sq = f.factors.sigma.front() * f.factors.sigma.front();
    const double floor = settings.relative_floor ? settings.sigma_floor * s1sq : settings.sigma_floor;
    const Vector direction = apply_low_rank_preconditioner(Ur, sr, floor, f.gbar);
    out.theta = detail::step(theta, direction, eta);

    state.Obar = Ur;
    for (std::size_t j = 0; j < r; ++j)
        for (double& v : state.Obar.col(j))
            v *= sr[j];
    state.Lbar = linalg::multiply(linalg::rows(f.factors.V, 0, r), f.Lhat);
    state.U_prev = std::move(f.factors.U);
    state.sigma_prev = std::move(f.factors.sigma);
    state.r_max = f.next_r_max;
    ++state.step;
    return out;
}

inline WssrStepResult rssr_step(std::span<const double> theta, const EstimatorBundle& bundle, double eta,
                                WssrState& state, WssrSettings settings)
{
    settings.backend = SvdBackend::randomized;
    return wssr_step(theta, bundle, eta, state, settings);
}

} // namespace wssr

#endif
