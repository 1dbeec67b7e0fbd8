#ifndef WSSR_ESTIMATORS_HPP
#define WSSR_ESTIMATORS_HPP
//
// Batch estimators of the energy, gradient and the centred log-derivative
// matrix O (M x N) with residual vector L (N):
//
//   O[:, n] = (d_theta log|Psi(x_n)| - mean) / sqrt(N)
//   L[n]    = (E_L(x_n) - loss) / sqrt(N)
//   g       = 2 O L,  S = O O^T,  T = O^T O
//

#include <wssr/linalg.hpp>
#include <wssr/system.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace wssr {

using linalg::DenseMatrix;
using linalg::Vector;

struct SampleBatch {
    std::vector<ElectronConfiguration> configs;
    Vector local_energies;             // raw, Hartree
    std::vector<Vector> theta_logderivs;

    std::size_t size() const noexcept { return local_energies.size(); }
};

struct EstimatorBundle {
    double loss = 0.0;           // mean of clipped local energies
    double raw_loss = 0.0;       // mean of raw local energies
    double raw_variance = 0.0;   // population variance of raw local energies
    DenseMatrix O;               // M x N
    Vector L;                    // N
    Vector gradient;             // M

    std::size_t parameter_count() const noexcept { return O.rows(); }
    std::size_t sample_count() const noexcept { return O.cols(); }
};

// mean and population standard deviation
inline std::pair<double, double> mean_and_std(std::span<const double> v)
{
    double mean = 0.0;
    for (double e : v)
        mean += e;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double e : v)
        var += (e - mean) * (e - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var)};
}

//
// clamp values outside mean +- n_std * std (population statistics of the raw batch)
//
inline Vector clip_local_energies(std::span<const double> raw, double n_std)
{
    if (raw.size() < 2)
        throw Error(ErrorCode::DegenerateBatch, "clipping needs at least two samples");
    Vector out(raw.begin(), raw.end());
    if (std::isinf(n_std))
        return out;
    const auto [mean, sd] = mean_and_std(raw);
    const double lo = mean - n_std * sd;
    const double hi = mean + n_std * sd;
    for (double& e : out)
        e = std::clamp(e, lo, hi);
    return out;
}

inline EstimatorBundle assemble(const SampleBatch& batch,
                                double clip_n_std = std::numeric_limits<double>::infinity())
{
    const std::size_t N = batch.size();
    if (N < 2)
        throw Error(ErrorCode::DegenerateBatch, "estimators need at least two samples");
    if (batch.theta_logderivs.size() != N)
        throw Error(ErrorCode::InvalidArgument, "batch lists have different lengths");
    const std::size_t M = batch.theta_logderivs.front().size();
    for (double e : batch.local_energies)
        if (!std::isfinite(e))
            throw Error(ErrorCode::NumericalAbort, "non-finite local energy in batch");

    EstimatorBundle b;
    const auto [raw_mean, raw_sd] = mean_and_std(batch.local_energies);
    b.raw_loss = raw_mean;
    b.raw_variance = raw_sd * raw_sd;

    const Vector clipped = clip_local_energies(batch.local_energies, clip_n_std);
    double loss = 0.0;
    for (double e : clipped)
        loss += e;
    loss /= static_cast<double>(N);
    b.loss = loss;

    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    Vector mean(M, 0.0);
    for (const auto& d : batch.theta_logderivs) {
        if (d.size() != M)
            throw Error(ErrorCode::InvalidArgument, "log-derivative vectors differ in length");
        for (std::size_t p = 0; p < M; ++p)
            mean[p] += d[p];
    }
    for (double& m : mean)
        m /= static_cast<double>(N);

    b.O = DenseMatrix(M, N);
    b.L.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        auto col = b.O.col(n);
        const auto& d = batch.theta_logderivs[n];
        for (std::size_t p = 0; p < M; ++p)
            col[p] = (d[p] - mean[p]) * inv_sqrt_n;
        b.L[n] = (clipped[n] - loss) * inv_sqrt_n;
    }
    b.gradient = linalg::multiply(b.O, b.L);
    for (double& g : b.gradient)
        g *= 2.0;
    return b;
}

inline DenseMatrix s_matrix(const EstimatorBundle& b) { return linalg::multiply_nt(b.O, b.O); }

inline DenseMatrix t_matrix(const EstimatorBundle& b) { return linalg::multiply_tn(b.O, b.O); }

} // namespace wssr

#endif
