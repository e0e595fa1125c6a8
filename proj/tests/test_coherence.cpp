#include <bit>
#include "support.hpp"

using namespace mcomplete;
using testing_support::error_code_of;

namespace {

Matrix identity_columns(std::size_t n, std::size_t r) {
    Matrix f(n, r);
    for (std::size_t k = 0; k < r; ++k) f(k, k) = 1.0;
    return f;
}

// Columns of the n x n Sylvester–Hadamard matrix scaled by 1/√n.
Matrix hadamard_columns(std::size_t n, std::size_t r) {
    Matrix f(n, r);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < r; ++k)
            f(i, k) = (std::popcount(i & k) % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(n));
    return f;
}

} // namespace

TEST(CoherenceMu, IdentityColumnsAreMaximal) {
    for (std::size_t n = 1; n <= 64; ++n)
        for (std::size_t r = 1; r <= n; ++r)
            if (n % r == 0) EXPECT_EQ(coherence_mu(identity_columns(n, r)), static_cast<double>(n / r));
}

TEST(CoherenceMu, FlatFrameIsMinimal) { EXPECT_NEAR(coherence_mu(hadamard_columns(8, 2)), 1.0, 1e-15); }

TEST(CoherenceMu, MatchesExplicitProjector) {
    const Matrix u = random_orthogonal_model(100, 100, 4, {}, 6).U;
    const Matrix p = matmul_nt(u, u);
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) worst = std::max(worst, p(i, i)); // ‖P_U e_i‖² = (P_U)_ii
    const double mu = coherence_mu(u);
    EXPECT_NEAR(mu, 100.0 / 4.0 * worst, 1e-10);
    EXPECT_GE(mu, 1.0);
    EXPECT_LE(mu, 25.0);
}

TEST(CoherenceMu, RejectsNonOrthonormal) {
    Matrix u = identity_columns(4, 2);
    u(0, 1) = 0.5;
    EXPECT_EQ(error_code_of([&] { coherence_mu(u); }), ErrorCode::NotOrthonormal);
}

TEST(CoherenceProfile, SpikeIsMaximallyCoherent) {
    const std::size_t n1 = 7;
    const std::size_t n2 = 5;
    LowRankFactors f{identity_columns(n1, 1), {1.0}, identity_columns(n2, 1)};
    const CoherenceProfile p = coherence_profile(f);
    EXPECT_EQ(p.mu_u, 7.0);
    EXPECT_EQ(p.mu_v, 5.0);
    EXPECT_EQ(p.mu0, 7.0);
    EXPECT_NEAR(p.mu1, std::sqrt(35.0), 1e-14);
}

TEST(CoherenceProfile, FlatVectors) {
    LowRankFactors f{hadamard_columns(8, 1), {1.0}, hadamard_columns(8, 1)};
    f.V(3, 0) = -f.V(3, 0);
    const CoherenceProfile p = coherence_profile(f);
    EXPECT_NEAR(p.mu_u, 1.0, 1e-15);
    EXPECT_NEAR(p.mu_v, 1.0, 1e-15);
    EXPECT_NEAR(p.mu1, 1.0, 1e-15);
}

TEST(CoherenceProfile, CauchySchwarzBound) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t r = 1 + seed % 5;
        const LowRankFactors f = random_orthogonal_model(10 + seed % 7, 12, r, {}, seed);
        const CoherenceProfile p = coherence_profile(f);
        EXPECT_LE(p.mu1, p.mu0 * std::sqrt(static_cast<double>(r)) + 1e-9);
        EXPECT_GE(p.mu_u, 1.0 - 1e-12);
        EXPECT_LE(p.mu_u, static_cast<double>(p.n1) / r + 1e-12);
        EXPECT_GE(p.mu_v, 1.0 - 1e-12);
        EXPECT_LE(p.mu_v, static_cast<double>(p.n2) / r + 1e-12);
    }
}

TEST(CoherenceProfile, RandomOrthogonalModelIsIncoherent) {
    const std::size_t n = 200;
    const std::size_t r = 10;
    const double rbar = std::max<double>(r, std::log(n));
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        EXPECT_LE(coherence_profile(random_orthogonal_model(n, n, r, {}, seed)).mu0, 10.0 * rbar / r);
}

TEST(SampleBound, LinearInBeta) {
    const SampleBounds a = sample_bound(500, 3, 2.0, 1.5, 3.0, 2.0);
    const SampleBounds b = sample_bound(500, 3, 2.0, 1.5, 6.0, 2.0);
    EXPECT_DOUBLE_EQ(b.m_general, 2.0 * a.m_general);
    EXPECT_DOUBLE_EQ(b.m_small_rank, 2.0 * a.m_small_rank);
}

TEST(SampleBound, SmallRankArithmetic) {
    // 1024^{6/5} = 4096, so the bound is 4096 · 1 · 3 · ln 1024.
    const SampleBounds b = sample_bound(1024, 1, 1.0, 1.0, 3.0, 1.0);
    const double expected = 4096.0 * 3.0 * 10.0 * std::numbers::ln2;
    EXPECT_NEAR(b.m_small_rank, expected, 1e-9 * expected);
    EXPECT_NEAR(b.m_small_rank, 85173.9255, 1e-3);
    // max(1, 1, 1024^{1/4}) = 4√2 for the general bound.
    const double general = 4.0 * std::sqrt(2.0) * 1024.0 * 3.0 * 10.0 * std::numbers::ln2;
    EXPECT_NEAR(b.m_general, general, 1e-12 * general);
    EXPECT_TRUE(b.small_rank_valid);
}

TEST(SampleBound, SmallRankValidityBoundary) {
    const std::size_t n = 1000;
    const auto r = static_cast<std::size_t>(std::ceil(std::pow(n, 0.2))) + 1;
    EXPECT_FALSE(sample_bound(n, r, 1.0, 1.0, 3.0).small_rank_valid);
    EXPECT_TRUE(sample_bound(n, 1, 1.0, 1.0, 3.0).small_rank_valid);
}

TEST(SampleBound, RejectsSmallBeta) {
    EXPECT_EQ(error_code_of([] { sample_bound(100, 1, 1.0, 1.0, 2.0); }), ErrorCode::OutOfRange);
    EXPECT_EQ(error_code_of([] { sample_bound(100, 1, 1.0, 1.0, 1.0); }), ErrorCode::OutOfRange);
}
