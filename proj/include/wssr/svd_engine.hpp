#ifndef WSSR_SVD_ENGINE_HPP
#define WSSR_SVD_ENGINE_HPP
//
// Truncated SVD of the streamed matrix Ohat (M x (N + r)):
//   - ssi_svd        block subspace iteration on Ohat Ohat^T, optionally warm started
//   - randomized_svd Gaussian range sketch followed by an SVD of the reduced matrix
//   - subspace_drift distance between consecutive factorizations
//

#include <wssr/linalg.hpp>

#include <cstdint>
#include <optional>
#include <random>

namespace wssr::svd {

using linalg::DenseMatrix;
using linalg::Vector;

struct TruncatedSvd {
    DenseMatrix U; // M x r, orthonormal columns
    Vector sigma;  // r, nonincreasing
    DenseMatrix V; // r x cols, orthonormal rows

    std::size_t rank() const noexcept { return sigma.size(); }
};

struct SsiReport {
    std::size_t iterations_used = 0;
    double subspace_residual = 0.0;
    bool warm_started = false;
};

struct SsiOptions {
    std::size_t max_iters = 3;
    // early exit once the subspace residual drops below this
    double tolerance = 1e-10;
    // seed for the random orthonormal start when no initial guess is given
    std::uint64_t cold_seed = 0;
};

inline DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix G(rows, cols);
    for (double& v : G.data())
        v = normal(engine);
    return G;
}

namespace detail {

inline void check_rank(const DenseMatrix& A, std::size_t rank)
{
    if (rank == 0 || rank > std::min(A.rows(), A.cols()))
        throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(rank) + " exceeds min(" +
                                                 std::to_string(A.rows()) + ", " + std::to_string(A.cols()) + ")");
}

inline void check_nonzero(const DenseMatrix& A)
{
    if (!A.all_finite())
        throw Error(ErrorCode::NonFinite, "input matrix has non-finite entries");
    if (linalg::frobenius_norm(A) == 0.0)
        throw Error(ErrorCode::DegenerateInput, "input matrix is zero");
}

// ||Y - Q (Q^T Y)||_F where Y = A A^T Q
inline double projection_residual(const DenseMatrix& Q, const DenseMatrix& Y)
{
    const DenseMatrix C = linalg::multiply_tn(Q, Y);
    const DenseMatrix P = linalg::multiply(Q, C);
    return linalg::frobenius_norm(linalg::subtract(Y, P));
}

} // namespace detail

//
// Subspace iteration:
//
//   Q_i    = orth(U_{i-1})
//   V_i    = Ohat^T Q_i
//   U_i    = Ohat V_i
//
// followed by a QR of the last V, V = Qv Rv, so that Q^T Ohat = Rv^T Qv^T.
// Rv is diagonalised with a small r x r SVD (it is diagonal up to sign once
// the iteration has separated the singular vectors), giving
// U = Q Ur, sigma, V = (Qv W)^T.
//
inline std::pair<TruncatedSvd, SsiReport> ssi_svd(const DenseMatrix& Ohat, std::size_t rank,
                                                  const std::optional<DenseMatrix>& U_init,
                                                  const SsiOptions& options = {})
{
    detail::check_rank(Ohat, rank);
    detail::check_nonzero(Ohat);
    if (options.max_iters == 0)
        throw Error(ErrorCode::InvalidArgument, "ssi_svd needs at least one iteration");

    const std::size_t M = Ohat.rows();
    SsiReport report;
    report.warm_started = U_init.has_value();

    DenseMatrix start;
    if (U_init) {
        if (U_init->rows() != M || U_init->cols() != rank)
            throw Error(ErrorCode::InvalidArgument, "initial guess has the wrong shape");
        start = *U_init;
    }
    else {
        start = gaussian_matrix(M, rank, options.cold_seed);
    }

    const double norm_sq = std::pow(linalg::frobenius_norm(Ohat), 2);
    DenseMatrix Q;
    DenseMatrix V;
    DenseMatrix U_next = std::move(start);
    for (std::size_t i = 1; i <= options.max_iters; ++i) {
        Q = linalg::qr_orthonormalize(U_next).Q;
        V = linalg::multiply_tn(Ohat, Q);
        U_next = linalg::multiply(Ohat, V);
        report.iterations_used = i;
        report.subspace_residual = detail::projection_residual(Q, U_next) / norm_sq;
        if (report.subspace_residual < options.tolerance)
            break;
    }

    const auto vqr = linalg::qr_orthonormalize(V); // V: cols x r
    const auto small = linalg::exact_svd(linalg::transpose(vqr.R));

    TruncatedSvd out;
    out.U = linalg::multiply(Q, small.U);
    out.sigma = small.sigma;
    out.V = linalg::multiply_nt(small.Vt, vqr.Q); // (Qv W)^T = W^T Qv^T
    return {std::move(out), report};
}

//
// Randomized range finder with a Gaussian test matrix:
//   Y = Ohat Omega, Q = orth(Y), B = Q^T Ohat = Ub S Vb^T, U = Q Ub
//
inline TruncatedSvd randomized_svd(const DenseMatrix& Ohat, std::size_t rank, std::size_t oversample,
                                   std::uint64_t seed)
{
    detail::check_rank(Ohat, rank + oversample);
    detail::check_nonzero(Ohat);

    const std::size_t width = rank + oversample;
    const DenseMatrix omega = gaussian_matrix(Ohat.cols(), width, seed);
    const DenseMatrix Q = linalg::qr_orthonormalize(linalg::multiply(Ohat, omega)).Q;
    const DenseMatrix B = linalg::multiply_tn(Q, Ohat);
    const auto small = linalg::exact_svd(B);

    TruncatedSvd out;
    out.U = linalg::multiply(Q, linalg::columns(small.U, 0, rank));
    out.sigma.assign(small.sigma.begin(), small.sigma.begin() + static_cast<std::ptrdiff_t>(rank));
    out.V = linalg::rows(small.Vt, 0, rank);
    return out;
}

// exact SVD truncated to the leading `rank` triplets
inline TruncatedSvd truncated_exact_svd(const DenseMatrix& Ohat, std::size_t rank)
{
    detail::check_rank(Ohat, rank);
    detail::check_nonzero(Ohat);
    const auto full = linalg::exact_svd(Ohat);
    TruncatedSvd out;
    out.U = linalg::columns(full.U, 0, rank);
    out.sigma.assign(full.sigma.begin(), full.sigma.begin() + static_cast<std::ptrdiff_t>(rank));
    out.V = linalg::rows(full.Vt, 0, rank);
    return out;
}

struct Drift {
    double sigma_drift = 0.0;
    double projector_drift = 0.0;
};

//
// sigma_drift     = |s_prev - s_curr|_2
// projector_drift = |U1 U1^T - U2 U2^T|_2 = |(I - U1 U1^T) U2|_2 for equal-dimension subspaces,
//                   evaluated from the r x r Gram matrix of the residual block
//
inline Drift subspace_drift(const TruncatedSvd& prev, const TruncatedSvd& curr)
{
    const std::size_t k = std::min(prev.rank(), curr.rank());
    Drift d;
    if (k == 0)
        return d;
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        s += (prev.sigma[i] - curr.sigma[i]) * (prev.sigma[i] - curr.sigma[i]);
    d.sigma_drift = std::sqrt(s);

    const DenseMatrix U1 = linalg::columns(prev.U, 0, k);
    const DenseMatrix U2 = linalg::columns(curr.U, 0, k);
    const DenseMatrix W = linalg::subtract(U2, linalg::multiply(U1, linalg::multiply_tn(U1, U2)));
    const DenseMatrix G = linalg::multiply_tn(W, W);
    const auto eig = linalg::exact_svd(G);
    d.projector_drift = std::sqrt(std::max(0.0, eig.sigma.front()));
    return d;
}

} // namespace wssr::svd

#endif
