#include "support.hpp"

using namespace mcomplete;
using testing_support::error_code_of;

namespace {

double rel_error(const Matrix& x, const Matrix& m) { return frobenius_norm(x - m) / frobenius_norm(m); }

LinearMeasurementSet canonical_measurements(const SampleSet& s, const std::vector<double>& values) {
    LinearMeasurementSet meas;
    for (const auto& ix : s.indices) {
        Matrix a(s.rows, s.cols);
        a(ix.row, ix.col) = 1.0;
        meas.operators.push_back(std::move(a));
    }
    meas.values = values;
    meas.orthonormal = true;
    return meas;
}

} // namespace

TEST(SolverOptions, Validation) {
    SolverOptions o;
    EXPECT_NO_THROW(o.validate());
    o.penalty = 0.0;
    EXPECT_EQ(error_code_of([&] { o.validate(); }), ErrorCode::OutOfRange);
    o = {};
    o.max_iter = 0;
    EXPECT_EQ(error_code_of([&] { o.validate(); }), ErrorCode::OutOfRange);
    o = {};
    o.tol_dual = -1.0;
    EXPECT_EQ(error_code_of([&] { o.validate(); }), ErrorCode::OutOfRange);
}

TEST(Complete, FullyObservedReturnsData) {
    const Matrix m = gaussian_factor_model(8, 2, 1).materialize();
    const SampleSet s = sample_uniform(8, 8, 64, 0);
    const CompletionResult r = complete(s, gather(m, s));
    EXPECT_TRUE(r.converged);
    EXPECT_LE(max_abs(r.X_opt - m), 1e-12);
    EXPECT_NEAR(r.nuclear_value, nuclear_norm(m), 1e-9);
}

TEST(Complete, ObservedEntriesAreMatchedExactly) {
    const Matrix m = gaussian_factor_model(15, 2, 3).materialize();
    const SampleSet s = sample_uniform(15, 15, 120, 3);
    const auto b = gather(m, s);
    const CompletionResult r = complete(s, b);
    EXPECT_EQ(gather(r.X_opt, s), b);
    if (r.converged) EXPECT_LE(r.primal_residual, 1e-8 * std::max(1.0, frobenius_norm(scatter(s, b))));
}

TEST(Complete, HiddenCornerOfSpikeIsNotRecovered) {
    const std::size_t n = 10;
    Matrix m(n, n);
    m(0, n - 1) = 1.0;
    std::vector<Index> idx;
    for (const auto& ix : sample_uniform(n, n, 91, 5).indices)
        if (!(ix.row == 0 && ix.col == n - 1) && idx.size() < 90) idx.push_back(ix);
    const SampleSet s = make_sample_set(n, n, idx);
    ASSERT_EQ(s.count(), 90u);
    const CompletionResult r = complete(s, gather(m, s));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(max_abs(r.X_opt), 0.0);
    EXPECT_DOUBLE_EQ(rel_error(r.X_opt, m), 1.0);
}

TEST(Complete, RecoversGaussianFactorsAtSixtyPercent) {
    const std::size_t n = 40;
    int recovered = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Matrix m = gaussian_factor_model(n, 2, seed).materialize();
        const SampleSet s = sample_uniform(n, n, 960, 1000 + seed);
        const CompletionResult r = complete(s, gather(m, s));
        if (rel_error(r.X_opt, m) < 1e-3) {
            ++recovered;
            EXPECT_LE(r.nuclear_value, nuclear_norm(m) + 1e-6);
        }
    }
    EXPECT_GE(recovered, 45);
}

TEST(Complete, RecoveryIsInsensitiveToTolerance) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t r = 1 + seed % 3;
        const Matrix m = gaussian_factor_model(30, r, seed).materialize();
        const SampleSet s = sample_uniform(30, 30, seed < 3 ? 600 : 150, seed);
        std::vector<bool> outcomes;
        for (double tol : {1e-7, 1e-8, 1e-9}) {
            SolverOptions o;
            o.tol_primal = o.tol_dual = tol;
            o.max_iter = 20000;
            outcomes.push_back(rel_error(complete(s, gather(m, s), o).X_opt, m) < 1e-3);
        }
        EXPECT_EQ(outcomes[0], outcomes[1]) << "seed " << seed;
        EXPECT_EQ(outcomes[1], outcomes[2]) << "seed " << seed;
    }
}

TEST(Complete, CertifiedInstancesAreRecovered) {
    const std::size_t n = 40;
    int certified = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t r = seed < 15 ? 1 : 2;
        const LowRankFactors f = random_orthogonal_model(n, n, r, {}, seed);
        const SampleSet s = sample_uniform(n, n, 800, seed);
        bool ok = false;
        try {
            ok = build_certificate(TangentSpace(f), s).certified;
        } catch (const Error&) {
        }
        if (!ok) continue;
        ++certified;
        const Matrix m = f.materialize();
        EXPECT_LT(rel_error(complete(s, gather(m, s)).X_opt, m), 1e-3) << "seed " << seed;
    }
    EXPECT_GE(certified, 20);
}

TEST(Complete, BudgetExhaustionIsReported) {
    const Matrix m = gaussian_factor_model(20, 3, 2).materialize();
    const SampleSet s = sample_uniform(20, 20, 150, 2);
    SolverOptions o;
    o.max_iter = 3;
    const CompletionResult r = complete(s, gather(m, s), o);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 3);
}

TEST(Complete, InputValidation) {
    const SampleSet s = sample_uniform(3, 3, 4, 0);
    EXPECT_EQ(error_code_of([&] { complete(s, std::vector<double>(3, 1.0)); }), ErrorCode::ShapeMismatch);
    std::vector<double> bad(4, 1.0);
    bad[2] = std::numeric_limits<double>::infinity();
    EXPECT_EQ(error_code_of([&] { complete(s, bad); }), ErrorCode::NonFinite);
}

TEST(CompletePsd, FullyObservedReturnsData) {
    const Matrix m = psd_factor_model(10, 3, 4).materialize();
    const SampleSet s = sample_uniform(10, 10, 100, 0);
    const CompletionResult r = complete_psd(s, gather(m, s));
    EXPECT_TRUE(r.converged);
    EXPECT_LE(max_abs(r.X_opt - m), 1e-6 * max_abs(m));
}

TEST(CompletePsd, RecoversMostPsdMatrices) {
    const std::size_t n = 40;
    const std::size_t m_pairs = static_cast<std::size_t>(0.4 * n * (n + 1) / 2);
    int recovered = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Matrix m = psd_factor_model(n, 3, seed).materialize();
        const SampleSet s = sample_symmetric(n, m_pairs, 1000 + seed);
        const CompletionResult r = complete_psd(s, gather(m, s));
        recovered += rel_error(r.X_opt, m) < 1e-3;
        EXPECT_LE(max_abs(r.X_opt - r.X_opt.transposed()), 1e-8);
        EXPECT_GE(symmetric_eigen(r.X_opt).values.back(), -1e-8);
    }
    EXPECT_GT(recovered, 25);
}

TEST(CompletePsd, RejectsAsymmetricData) {
    const SampleSet s = make_sample_set(3, 3, {{0, 1}, {1, 0}, {2, 2}});
    EXPECT_EQ(error_code_of([&] { complete_psd(s, std::vector<double>{1.0, 1.5, 2.0}); }), ErrorCode::AsymmetricData);
    EXPECT_EQ(error_code_of([] { complete_psd(sample_uniform(3, 2, 2, 0), std::vector<double>{1.0, 1.0}); }),
              ErrorCode::ShapeMismatch);
}

TEST(CompleteLinear, CanonicalBasisMatchesEntrySolver) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Matrix m = gaussian_factor_model(12, 2, seed).materialize();
        const SampleSet s = sample_uniform(12, 12, 90, seed);
        const auto b = gather(m, s);
        const CompletionResult entry = complete(s, b);
        const CompletionResult linear = complete_linear(canonical_measurements(s, b));
        EXPECT_FALSE(linear.rank_deficient);
        EXPECT_LE(max_abs(entry.X_opt - linear.X_opt), 1e-8);
    }
}

TEST(CompleteLinear, DeterminedSystemPinsTheMatrix) {
    const std::size_t n = 6;
    const Matrix m = gaussian_factor_model(n, 2, 7).materialize();
    const CompletionResult r = complete_linear(gaussian_measurements(m, n * n, 7));
    EXPECT_FALSE(r.rank_deficient);
    EXPECT_LE(rel_error(r.X_opt, m), 1e-6);
}

TEST(CompleteLinear, GaussianMeasurementsRecoverLowRank) {
    const std::size_t n = 20;
    const std::size_t r = 2;
    int recovered = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix m = gaussian_factor_model(n, r, seed).materialize();
        recovered += rel_error(complete_linear(gaussian_measurements(m, 4 * r * n, 100 + seed)).X_opt, m) < 1e-3;
    }
    EXPECT_GE(recovered, 8);
}

TEST(CompleteLinear, FlagsRankDeficientMeasurements) {
    const Matrix m = gaussian_factor_model(4, 1, 1).materialize();
    LinearMeasurementSet meas = gaussian_measurements(m, 5, 1);
    meas.operators.push_back(meas.operators[0]);
    meas.values.push_back(meas.values[0]);
    const CompletionResult r = complete_linear(meas);
    EXPECT_TRUE(r.rank_deficient);
    EXPECT_TRUE(r.X_opt.all_finite());
}

TEST(CompleteLinear, Validation) {
    LinearMeasurementSet empty;
    EXPECT_TRUE(error_code_of([&] { complete_linear(empty); }).has_value());
    LinearMeasurementSet ragged;
    ragged.operators = {Matrix(2, 2), Matrix(2, 3)};
    ragged.values = {0.0, 0.0};
    EXPECT_EQ(error_code_of([&] { complete_linear(ragged); }), ErrorCode::ShapeMismatch);
}
