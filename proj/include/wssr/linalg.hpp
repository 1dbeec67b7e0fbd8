#ifndef WSSR_LINALG_HPP
#define WSSR_LINALG_HPP
//
// Dense column-major matrices and the reference decompositions used across
// the library: Gram-Schmidt QR, one-sided Jacobi SVD, Cholesky solves and a
// small partially pivoted LU for determinants.
//
// All reductions run in a fixed order, so results are reproducible.
//

#include <wssr/error.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wssr::linalg {

using Vector = std::vector<double>;

class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows)
        , cols_(cols)
        , data_(rows * cols, 0.0)
    {
    }

    // entries are column-major
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows)
        , cols_(cols)
        , data_(std::move(entries))
    {
        if (data_.size() != rows_ * cols_)
            throw Error(ErrorCode::InvalidArgument, "entry count does not match shape");
        if (!all_finite())
            throw Error(ErrorCode::NonFinite, "matrix entries must be finite");
    }

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix I(n, n);
        for (std::size_t i = 0; i < n; ++i)
            I(i, i) = 1.0;
        return I;
    }

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows)
    {
        const std::size_t nr = rows.size();
        const std::size_t nc = nr ? rows.begin()->size() : 0;
        DenseMatrix A(nr, nc);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != nc)
                throw Error(ErrorCode::InvalidArgument, "ragged row list");
            std::size_t j = 0;
            for (double v : row)
                A(i, j++) = v;
            ++i;
        }
        return A;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept
    {
        assert(i < rows_ && j < cols_);
        return data_[j * rows_ + i];
    }
    double operator()(std::size_t i, std::size_t j) const noexcept
    {
        assert(i < rows_ && j < cols_);
        return data_[j * rows_ + i];
    }

    std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const noexcept { return {data_.data() + j * rows_, rows_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

//
// vector kernels
//

inline double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    assert(a.size() == b.size());
    // four interleaved partial sums, combined in a fixed order
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i)
        s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept
{
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += alpha * x[i];
}

inline Vector subtract(std::span<const double> a, std::span<const double> b)
{
    assert(a.size() == b.size());
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] = a[i] - b[i];
    return r;
}

inline double frobenius_norm(const DenseMatrix& A) noexcept { return norm2(A.data()); }

//
// matrix kernels
//

inline DenseMatrix transpose(const DenseMatrix& A)
{
    DenseMatrix T(A.cols(), A.rows());
    for (std::size_t j = 0; j < A.cols(); ++j)
        for (std::size_t i = 0; i < A.rows(); ++i)
            T(j, i) = A(i, j);
    return T;
}

namespace detail {

//
// C (m x n) += sign * A (m x kdim) * B (kdim x n, leading dimension ldb), all
// column-major. Each entry is summed over k in ascending order; four columns
// of C share one pass over A.
//
inline void gemm_accumulate(std::size_t m, std::size_t kdim, std::size_t n, const double* A, const double* B,
                            std::size_t ldb, double* C, double sign) noexcept
{
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        double* c0 = C + j * m;
        double* c1 = c0 + m;
        double* c2 = c1 + m;
        double* c3 = c2 + m;
        const double* b = B + j * ldb;
        for (std::size_t k = 0; k < kdim; ++k) {
            const double x0 = sign * b[k];
            const double x1 = sign * b[k + ldb];
            const double x2 = sign * b[k + 2 * ldb];
            const double x3 = sign * b[k + 3 * ldb];
            if (x0 == 0.0 && x1 == 0.0 && x2 == 0.0 && x3 == 0.0)
                continue;
            const double* a = A + k * m;
            for (std::size_t i = 0; i < m; ++i) {
                const double v = a[i];
                c0[i] += x0 * v;
                c1[i] += x1 * v;
                c2[i] += x2 * v;
                c3[i] += x3 * v;
            }
        }
    }
    for (; j < n; ++j) {
        double* c = C + j * m;
        const double* b = B + j * ldb;
        for (std::size_t k = 0; k < kdim; ++k) {
            const double x = sign * b[k];
            if (x == 0.0)
                continue;
            const double* a = A + k * m;
            for (std::size_t i = 0; i < m; ++i)
                c[i] += x * a[i];
        }
    }
}

} // namespace detail

// A * B
inline DenseMatrix multiply(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.cols() != B.rows())
        throw Error(ErrorCode::InvalidArgument, "multiply: inner dimensions differ");
    DenseMatrix C(A.rows(), B.cols());
    detail::gemm_accumulate(A.rows(), A.cols(), B.cols(), A.data().data(), B.data().data(), B.rows(),
                            C.data().data(), 1.0);
    return C;
}

// A^T * B
inline DenseMatrix multiply_tn(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.rows() != B.rows())
        throw Error(ErrorCode::InvalidArgument, "multiply_tn: row counts differ");
    return multiply(transpose(A), B);
}

// A * B^T
inline DenseMatrix multiply_nt(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.cols() != B.cols())
        throw Error(ErrorCode::InvalidArgument, "multiply_nt: column counts differ");
    return multiply(A, transpose(B));
}

// A * x
inline Vector multiply(const DenseMatrix& A, std::span<const double> x)
{
    if (A.cols() != x.size())
        throw Error(ErrorCode::InvalidArgument, "matvec: dimension mismatch");
    Vector y(A.rows(), 0.0);
    for (std::size_t k = 0; k < A.cols(); ++k)
        if (x[k] != 0.0)
            axpy(x[k], A.col(k), y);
    return y;
}

// A^T * x
inline Vector multiply_t(const DenseMatrix& A, std::span<const double> x)
{
    if (A.rows() != x.size())
        throw Error(ErrorCode::InvalidArgument, "matvec_t: dimension mismatch");
    Vector y(A.cols());
    for (std::size_t k = 0; k < A.cols(); ++k)
        y[k] = dot(A.col(k), x);
    return y;
}

inline DenseMatrix subtract(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw Error(ErrorCode::InvalidArgument, "subtract: shape mismatch");
    DenseMatrix C = A;
    for (std::size_t i = 0; i < C.data().size(); ++i)
        C.data()[i] -= B.data()[i];
    return C;
}

inline DenseMatrix scaled(DenseMatrix A, double alpha)
{
    for (double& v : A.data())
        v *= alpha;
    return A;
}

inline Vector scaled(Vector v, double alpha)
{
    for (double& x : v)
        x *= alpha;
    return v;
}

// columns [first, first + count)
inline DenseMatrix columns(const DenseMatrix& A, std::size_t first, std::size_t count)
{
    if (first + count > A.cols())
        throw Error(ErrorCode::InvalidArgument, "column range out of bounds");
    DenseMatrix C(A.rows(), count);
    std::copy_n(A.data().begin() + static_cast<std::ptrdiff_t>(first * A.rows()), count * A.rows(),
                C.data().begin());
    return C;
}

// rows [first, first + count)
inline DenseMatrix rows(const DenseMatrix& A, std::size_t first, std::size_t count)
{
    if (first + count > A.rows())
        throw Error(ErrorCode::InvalidArgument, "row range out of bounds");
    DenseMatrix C(count, A.cols());
    for (std::size_t j = 0; j < A.cols(); ++j)
        for (std::size_t i = 0; i < count; ++i)
            C(i, j) = A(first + i, j);
    return C;
}

// [A, B]
inline DenseMatrix hconcat(const DenseMatrix& A, const DenseMatrix& B)
{
    if (A.cols() > 0 && B.cols() > 0 && A.rows() != B.rows())
        throw Error(ErrorCode::InvalidArgument, "hconcat: row counts differ");
    const std::size_t nr = A.cols() > 0 ? A.rows() : B.rows();
    DenseMatrix C(nr, A.cols() + B.cols());
    std::copy(A.data().begin(), A.data().end(), C.data().begin());
    std::copy(B.data().begin(), B.data().end(), C.data().begin() + static_cast<std::ptrdiff_t>(A.data().size()));
    return C;
}

//
// QR by block classical Gram-Schmidt with one reorthogonalisation pass.
//
// Columns are processed in panels: a panel is projected against the finished
// columns with two matrix-product passes, then orthonormalised column by
// column. A column that loses more than three digits to cancellation gets a
// further pass against every preceding column.
//
// A numerically zero column (residual norm below 1e-12 * |A|_F) is replaced by
// the canonical vector e_m that keeps the largest component after
// orthogonalisation against the preceding columns; its R diagonal is zero.
//
struct QrResult {
    DenseMatrix Q;
    DenseMatrix R;
};

namespace detail {

// v <- v - Q[:, first:last] (Q[:, first:last]^T v), twice; adds the coefficients to coeffs[first:last]
inline void orthogonalize_range(const DenseMatrix& Q, std::size_t first, std::size_t last, std::span<double> v,
                                double* coeffs)
{
    std::vector<double> c(last - first);
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = first; i < last; ++i)
            c[i - first] = dot(Q.col(i), v);
        for (std::size_t i = first; i < last; ++i) {
            axpy(-c[i - first], Q.col(i), v);
            if (coeffs)
                coeffs[i] += c[i - first];
        }
    }
}

} // namespace detail

inline QrResult qr_orthonormalize(const DenseMatrix& A)
{
    const std::size_t m = A.rows();
    const std::size_t n = A.cols();
    if (m < n)
        throw Error(ErrorCode::InvalidArgument, "qr_orthonormalize requires rows >= cols");
    const double anorm = frobenius_norm(A);
    if (!(anorm >= 1e-300))
        throw Error(ErrorCode::ZeroMatrix, "qr_orthonormalize of a zero matrix");

    constexpr std::size_t panel = 32;
    const double drop = 1e-12 * anorm;
    QrResult out{DenseMatrix(m, n), DenseMatrix(n, n)};
    // squared norms of the rows of the finished Q columns; |(I - Q Q^T) e_k|^2 = 1 - row_sq[k]
    std::vector<double> row_sq(m, 0.0);

    for (std::size_t p0 = 0; p0 < n; p0 += panel) {
        const std::size_t w = std::min(panel, n - p0);
        DenseMatrix P = columns(A, p0, w);
        std::vector<double> before(w);
        for (std::size_t c = 0; c < w; ++c)
            before[c] = norm2(P.col(c));

        if (p0 > 0) {
            const DenseMatrix Qt = transpose(columns(out.Q, 0, p0));
            for (int pass = 0; pass < 2; ++pass) {
                DenseMatrix C(p0, w);
                detail::gemm_accumulate(p0, m, w, Qt.data().data(), P.data().data(), m, C.data().data(), 1.0);
                detail::gemm_accumulate(m, p0, w, out.Q.data().data(), C.data().data(), p0, P.data().data(), -1.0);
                for (std::size_t c = 0; c < w; ++c)
                    for (std::size_t i = 0; i < p0; ++i)
                        out.R(i, p0 + c) += C(i, c);
            }
        }

        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t j = p0 + c;
            auto v = P.col(c);
            double* rcol = &out.R(0, j);
            detail::orthogonalize_range(out.Q, p0, j, v, rcol);
            double nrm = norm2(v);
            if (nrm >= drop && nrm < 1e-3 * before[c]) {
                detail::orthogonalize_range(out.Q, 0, j, v, rcol);
                nrm = norm2(v);
            }

            if (nrm < drop) {
                // rank-deficient column: substitute a canonical direction
                double best = -1.0;
                std::size_t pick = 0;
                for (std::size_t e = 0; e < m; ++e) {
                    const double wn = std::sqrt(std::max(0.0, 1.0 - row_sq[e]));
                    if (wn > best + 1e-12) {
                        best = wn;
                        pick = e;
                    }
                }
                std::fill(v.begin(), v.end(), 0.0);
                v[pick] = 1.0;
                detail::orthogonalize_range(out.Q, 0, j, v, nullptr);
                nrm = norm2(v);
                out.R(j, j) = 0.0;
            }
            else {
                out.R(j, j) = nrm;
            }
            auto q = out.Q.col(j);
            for (std::size_t i = 0; i < m; ++i) {
                q[i] = v[i] / nrm;
                row_sq[i] += q[i] * q[i];
            }
        }
    }
    return out;
}

//
// thin SVD A = U diag(sigma) Vt with sigma nonnegative and descending
//
struct SvdResult {
    DenseMatrix U;  // rows x k
    Vector sigma;   // k
    DenseMatrix Vt; // k x cols
};

namespace detail {

// one-sided Jacobi on a tall (rows >= cols) matrix
inline SvdResult jacobi_svd_tall(const DenseMatrix& A)
{
    const std::size_t m = A.rows();
    const std::size_t n = A.cols();
    DenseMatrix W = A;
    DenseMatrix V = DenseMatrix::identity(n);
    constexpr double tol = 1e-15;
    constexpr int max_sweeps = 100;
    // columns below this squared norm are roundoff and left alone
    const double negligible = std::pow(std::numeric_limits<double>::epsilon() * frobenius_norm(A), 2);

    std::vector<double> sq(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        // squared column norms, refreshed every sweep and updated by each rotation
        for (std::size_t j = 0; j < n; ++j)
            sq[j] = dot(W.col(j), W.col(j));
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = sq[p];
                const double beta = sq[q];
                if (alpha <= negligible || beta <= negligible)
                    continue;
                auto wp = W.col(p);
                auto wq = W.col(q);
                const double gamma = dot(wp, wq);
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double a = wp[i];
                    const double b = wq[i];
                    wp[i] = c * a - s * b;
                    wq[i] = s * a + c * b;
                }
                sq[p] = std::max(0.0, alpha - t * gamma);
                sq[q] = beta + t * gamma;
                auto vp = V.col(p);
                auto vq = V.col(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = vp[i];
                    const double b = vq[i];
                    vp[i] = c * a - s * b;
                    vq[i] = s * a + c * b;
                }
            }
        }
        if (!rotated)
            break;
    }

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j)
        norms[j] = norm2(W.col(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    SvdResult out{DenseMatrix(m, n), Vector(n), DenseMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.sigma[k] = norms[j];
        if (norms[j] > 0.0) {
            const auto w = W.col(j);
            auto u = out.U.col(k);
            for (std::size_t i = 0; i < m; ++i)
                u[i] = w[i] / norms[j];
        }
        for (std::size_t i = 0; i < n; ++i)
            out.Vt(k, i) = V(i, j);
    }
    // clean up orthogonality and complete the basis for zero singular values
    if (n == 0)
        return out;
    if (frobenius_norm(out.U) > 0.0)
        out.U = qr_orthonormalize(out.U).Q;
    else
        out.U = columns(DenseMatrix::identity(m), 0, n);
    return out;
}

//
// Jacobi preceded by a QR of the norm-sorted columns: A P = Q R, R^T = U1 S V1^T,
// so A = (Q V1) S (P U1)^T. Jacobi on R^T converges in fewer sweeps and skips
// the rows that the QR found to be dependent.
//
inline SvdResult preconditioned_svd_tall(const DenseMatrix& A)
{
    const std::size_t m = A.rows();
    const std::size_t n = A.cols();
    if (n < 2 || frobenius_norm(A) == 0.0)
        return jacobi_svd_tall(A);
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j)
        norms[j] = norm2(A.col(j));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
    DenseMatrix AP(m, n);
    for (std::size_t k = 0; k < n; ++k)
        std::copy(A.col(perm[k]).begin(), A.col(perm[k]).end(), AP.col(k).begin());

    const auto qr = qr_orthonormalize(AP);
    const auto inner = jacobi_svd_tall(transpose(qr.R));
    SvdResult out;
    out.U = multiply(qr.Q, transpose(inner.Vt));
    out.sigma = inner.sigma;
    out.Vt = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            out.Vt(k, perm[i]) = inner.U(i, k);
    return out;
}

} // namespace detail

inline SvdResult exact_svd(const DenseMatrix& A)
{
    if (!A.all_finite())
        throw Error(ErrorCode::NonFinite, "exact_svd input must be finite");
    if (A.rows() >= A.cols())
        return detail::preconditioned_svd_tall(A);
    SvdResult t = detail::preconditioned_svd_tall(transpose(A));
    return SvdResult{transpose(t.Vt), std::move(t.sigma), transpose(t.U)};
}

//
// Cholesky factorisation of T + shift*I
//
struct SpdFactorization {
    std::size_t dimension = 0;
    DenseMatrix lower;
};

inline SpdFactorization cholesky(const DenseMatrix& T, double shift = 0.0)
{
    const std::size_t n = T.rows();
    if (T.cols() != n)
        throw Error(ErrorCode::InvalidArgument, "cholesky requires a square matrix");
    if (!(shift >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "shift must be nonnegative");
    double scale = 1.0;
    for (double v : T.data())
        scale = std::max(scale, std::abs(v));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 1; i < n; ++i)
            if (std::abs(T(i, j) - T(j, i)) > 1e-10 * scale)
                throw Error(ErrorCode::InvalidArgument, "cholesky requires a symmetric matrix");

    SpdFactorization f{n, DenseMatrix(n, n)};
    DenseMatrix& L = f.lower;
    for (std::size_t j = 0; j < n; ++j) {
        double d = T(j, j) + shift;
        for (std::size_t k = 0; k < j; ++k)
            d -= L(j, k) * L(j, k);
        if (!(d > 0.0))
            throw Error(ErrorCode::NotPositiveDefinite,
                        "nonpositive pivot " + std::to_string(d) + " at column " + std::to_string(j));
        const double ljj = std::sqrt(d);
        L(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = T(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= L(i, k) * L(j, k);
            L(i, j) = s / ljj;
        }
    }
    return f;
}

inline DenseMatrix solve(const SpdFactorization& f, const DenseMatrix& B)
{
    const std::size_t n = f.dimension;
    if (B.rows() != n)
        throw Error(ErrorCode::InvalidArgument, "solve: right-hand side has wrong row count");
    const DenseMatrix& L = f.lower;
    DenseMatrix X = B;
    for (std::size_t c = 0; c < X.cols(); ++c) {
        auto x = X.col(c);
        for (std::size_t i = 0; i < n; ++i) {
            double s = x[i];
            for (std::size_t k = 0; k < i; ++k)
                s -= L(i, k) * x[k];
            x[i] = s / L(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x[ii];
            for (std::size_t k = ii + 1; k < n; ++k)
                s -= L(k, ii) * x[k];
            x[ii] = s / L(ii, ii);
        }
    }
    return X;
}

// X with (T + shift I) X = B
inline DenseMatrix spd_solve(const DenseMatrix& T, double shift, const DenseMatrix& B)
{
    return solve(cholesky(T, shift), B);
}

inline Vector spd_solve(const DenseMatrix& T, double shift, std::span<const double> b)
{
    DenseMatrix B(b.size(), 1, Vector(b.begin(), b.end()));
    return spd_solve(T, shift, B).data();
}

//
// LU with partial pivoting, used for determinants of small orbital matrices
//
class LuFactorization {
public:
    explicit LuFactorization(DenseMatrix A)
        : lu_(std::move(A))
        , perm_(lu_.rows())
    {
        const std::size_t n = lu_.rows();
        if (lu_.cols() != n)
            throw Error(ErrorCode::InvalidArgument, "LU requires a square matrix");
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t piv = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    piv = i;
                }
            if (best == 0.0) {
                singular_ = true;
                continue;
            }
            if (piv != k) {
                for (std::size_t j = 0; j < n; ++j)
                    std::swap(lu_(k, j), lu_(piv, j));
                std::swap(perm_[k], perm_[piv]);
                sign_ = -sign_;
            }
            const double inv = 1.0 / lu_(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) * inv;
                lu_(i, k) = f;
                if (f != 0.0)
                    for (std::size_t j = k + 1; j < n; ++j)
                        lu_(i, j) -= f * lu_(k, j);
            }
        }
        if (!singular_) {
            log_abs_det_ = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                log_abs_det_ += std::log(std::abs(lu_(k, k)));
                if (lu_(k, k) < 0.0)
                    sign_ = -sign_;
            }
        }
    }

    bool singular() const noexcept { return singular_; }
    int sign() const noexcept { return singular_ ? 0 : sign_; }
    double log_abs_det() const noexcept
    {
        return singular_ ? -std::numeric_limits<double>::infinity() : log_abs_det_;
    }

    DenseMatrix inverse() const
    {
        if (singular_)
            throw Error(ErrorCode::SingularMatrix, "inverse of a singular matrix");
        const std::size_t n = lu_.rows();
        DenseMatrix inv(n, n);
        for (std::size_t c = 0; c < n; ++c) {
            auto x = inv.col(c);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = perm_[i] == c ? 1.0 : 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < i; ++k)
                    x[i] -= lu_(i, k) * x[k];
            for (std::size_t ii = n; ii-- > 0;) {
                for (std::size_t k = ii + 1; k < n; ++k)
                    x[ii] -= lu_(ii, k) * x[k];
                x[ii] /= lu_(ii, ii);
            }
        }
        return inv;
    }

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
    int sign_ = 1;
    bool singular_ = false;
    double log_abs_det_ = 0.0;
};

} // namespace wssr::linalg

#endif
