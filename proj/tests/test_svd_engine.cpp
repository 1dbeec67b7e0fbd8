#include "scenarios.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace wssr;
using namespace wssr::linalg;
using namespace wssr::svd;
using namespace wssr::testing;

namespace {

Vector geometric_spectrum(std::size_t k, double ratio)
{
    Vector s(k);
    for (std::size_t i = 0; i < k; ++i)
        s[i] = std::pow(ratio, static_cast<double>(i + 1));
    return s;
}

// brute-force |P1 - P2|_2 through the M x M projectors
double brute_projector_drift(const DenseMatrix& U1, const DenseMatrix& U2)
{
    const auto D = subtract(multiply_nt(U1, U1), multiply_nt(U2, U2));
    return exact_svd(D).sigma.front();
}

} // namespace

TEST(SsiSvd, DiagonalColdStart)
{
    DenseMatrix A(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        A(i, i) = 5.0 - static_cast<double>(i);
    const auto [f, rep] = ssi_svd(A, 2, std::nullopt, {.max_iters = 50});
    EXPECT_NEAR(f.sigma[0], 5.0, 1e-10);
    EXPECT_NEAR(f.sigma[1], 4.0, 1e-10);
    EXPECT_FALSE(rep.warm_started);
}

TEST(SsiSvd, ExactSubspaceIsFixedPoint)
{
    const auto A = with_spectrum(30, 20, {4.0, 3.0, 2.0, 1.0, 0.5}, 9);
    const auto exact = truncated_exact_svd(A, 3);
    const auto [f, rep] = ssi_svd(A, 3, exact.U, {.max_iters = 1});
    EXPECT_EQ(rep.iterations_used, 1u);
    EXPECT_TRUE(rep.warm_started);
    EXPECT_LT(rep.subspace_residual, 1e-12);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_NEAR(f.sigma[i], exact.sigma[i], 1e-12);
}

TEST(SsiSvd, GeometricSpectrumMatchesOracle)
{
    const auto A = with_spectrum(200, 120, geometric_spectrum(120, 0.5), 21);
    const auto oracle = exact_svd(A);
    const auto [f, rep] = ssi_svd(A, 10, std::nullopt, {.max_iters = 30, .tolerance = 0.0});
    EXPECT_EQ(rep.iterations_used, 30u);
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_NEAR(f.sigma[i], oracle.sigma[i], 1e-8 * oracle.sigma[0]);
    EXPECT_LT(orthonormality_error(f.U), 1e-10);
    EXPECT_LT(orthonormality_error(transpose(f.V)), 1e-10);
}

TEST(SsiSvd, FactorsReconstructProjection)
{
    const auto A = random_matrix(40, 25, 2);
    const auto [f, rep] = ssi_svd(A, 25, std::nullopt, {.max_iters = 5});
    // full rank: U Sigma V spans everything, reconstruction is exact
    EXPECT_LT(frobenius_norm(subtract(reconstruct(f), A)) / frobenius_norm(A), 1e-12);
    EXPECT_TRUE(std::is_sorted(f.sigma.begin(), f.sigma.end(), std::greater<>()));
}

TEST(SsiSvd, ResidualDecreasesWithIterations)
{
    // a cold start may bump once in the first iterations while the block rotates
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Vector s = geometric_spectrum(30, 0.8);
        for (std::size_t i = 5; i < s.size(); ++i)
            s[i] *= 0.5; // sigma_5 / sigma_6 = 2.5
        const auto A = with_spectrum(50, 40, s, 300 + trial);
        double last = std::numeric_limits<double>::infinity();
        for (std::size_t m = 3; m <= 30; ++m) {
            const auto rep = ssi_svd(A, 5, std::nullopt, {.max_iters = m, .tolerance = 0.0, .cold_seed = trial}).second;
            EXPECT_LE(rep.subspace_residual, last * (1.0 + 1e-9) + 1e-14) << "trial " << trial << " m " << m;
            last = rep.subspace_residual;
        }
        EXPECT_LT(last, 1e-8) << "trial " << trial;
    }
}

TEST(SsiSvd, WarmStartHalvesIterations)
{
    const auto r = scenarios::warm_start_trials(20);
    for (std::size_t t = 0; t < r.warm.size(); ++t)
        EXPECT_LE(2 * r.warm[t], r.cold[t]) << "trial " << t;
}

TEST(SsiSvd, ColumnPermutationLeavesSigma)
{
    const auto A = with_spectrum(30, 20, geometric_spectrum(20, 0.6), 4);
    DenseMatrix P(30, 20);
    for (std::size_t j = 0; j < 20; ++j) {
        const auto src = A.col(19 - j);
        std::copy(src.begin(), src.end(), P.col(j).begin());
    }
    const SsiOptions opt{.max_iters = 200};
    const auto a = ssi_svd(A, 4, std::nullopt, opt).first;
    const auto b = ssi_svd(P, 4, std::nullopt, opt).first;
    EXPECT_LT(max_abs_diff(a.sigma, b.sigma), 1e-10);
}

TEST(SsiSvd, Errors)
{
    try {
        ssi_svd(random_matrix(4, 3, 1), 4, std::nullopt);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RankTooLarge);
    }
    try {
        ssi_svd(DenseMatrix(4, 3), 2, std::nullopt);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
    }
}

TEST(RandomizedSvd, ExactLowRankRecovered)
{
    const Vector s0{7.0, 3.0, 2.0, 0.5};
    const auto A = with_spectrum(60, 40, s0, 8);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = randomized_svd(A, 4, 5, seed);
        EXPECT_LT(max_abs_diff(f.sigma, s0), 1e-10);
        EXPECT_LT(frobenius_norm(subtract(reconstruct(f), A)), 1e-10);
    }
}

TEST(RandomizedSvd, ZeroInputRejected)
{
    try {
        randomized_svd(DenseMatrix(10, 10), 2, 2, 0);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
    }
}

TEST(RandomizedSvd, TailBoundOverSeeds)
{
    Vector s(200);
    for (std::size_t i = 0; i < 200; ++i)
        s[i] = i < 20 ? 10.0 / static_cast<double>(i + 1) : 0.1 * std::pow(0.97, static_cast<double>(i - 20));
    const auto A = with_spectrum(300, 200, s, 77);
    const double tail = exact_svd(A).sigma[20];
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto f = randomized_svd(A, 20, 10, seed);
        const double err = exact_svd(subtract(A, reconstruct(f))).sigma.front();
        EXPECT_LE(err, 10.0 * tail) << "seed " << seed;
    }
}

TEST(RandomizedSvd, DeterministicForSeed)
{
    const auto A = random_matrix(30, 20, 5);
    const auto a = randomized_svd(A, 3, 4, 11);
    const auto b = randomized_svd(A, 3, 4, 11);
    EXPECT_EQ(a.U, b.U);
    EXPECT_EQ(a.sigma, b.sigma);
}

TEST(Drift, IdenticalIsZero)
{
    const auto f = truncated_exact_svd(random_matrix(20, 10, 3), 3);
    const auto d = subspace_drift(f, f);
    EXPECT_EQ(d.sigma_drift, 0.0);
    EXPECT_LT(d.projector_drift, 1e-12);
}

TEST(Drift, RotationWithinSpan)
{
    const auto f = truncated_exact_svd(random_matrix(20, 10, 3), 3);
    auto g = f;
    const auto R = random_orthonormal(3, 3, 99);
    g.U = multiply(f.U, R);
    const auto d = subspace_drift(f, g);
    EXPECT_EQ(d.sigma_drift, 0.0);
    EXPECT_LT(d.projector_drift, 1e-12);
}

TEST(Drift, MatchesBruteForceProjectors)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TruncatedSvd a, b;
        a.U = random_orthonormal(20, 3, 500 + seed);
        b.U = random_orthonormal(20, 3, 600 + seed);
        a.sigma = {3.0, 2.0, 1.0};
        b.sigma = {2.5, 2.0, 0.0};
        const auto d = subspace_drift(a, b);
        EXPECT_NEAR(d.projector_drift, brute_projector_drift(a.U, b.U), 1e-10);
        EXPECT_NEAR(d.sigma_drift, std::sqrt(0.25 + 1.0), 1e-15);
    }
}

TEST(Drift, SmallRotationResolved)
{
    // a rotation by 1e-9 must not be hidden under a sqrt(eps) floor
    TruncatedSvd a, b;
    a.U = DenseMatrix(3, 1, {1.0, 0.0, 0.0});
    b.U = DenseMatrix(3, 1, {std::cos(1e-9), std::sin(1e-9), 0.0});
    a.sigma = b.sigma = {1.0};
    EXPECT_NEAR(subspace_drift(a, b).projector_drift, 1e-9, 1e-15);
}

TEST(Drift, TruncatesToSmallerRank)
{
    const auto f = truncated_exact_svd(random_matrix(20, 10, 3), 4);
    const auto g = truncated_exact_svd(random_matrix(20, 10, 3), 2);
    const auto d = subspace_drift(f, g);
    EXPECT_LT(d.projector_drift, 1e-12);
    EXPECT_EQ(d.sigma_drift, 0.0);
}
