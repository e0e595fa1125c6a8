// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "mcomplete/mcomplete.hpp"
#include "oracles.hpp"

using namespace mcomplete;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return gaussian_matrix(rows, cols, rng);
}

double rel_error(const Matrix& x, const Matrix& m) { return frobenius_norm(x - m) / frobenius_norm(m); }

// 1. Projector algebra and explicit-basis agreement.
Outcome projector_algebra() {
    SplitMix64 dims(1);
    double algebra = 0.0;
    double oracle_gap = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::size_t n1 = 1 + dims.below(12);
        const std::size_t n2 = 1 + dims.below(10);
        const std::size_t r = 1 + dims.below(std::min<std::size_t>({3, n1, n2}));
        const TangentSpace t(random_orthogonal_model(n1, n2, r, {}, seed));
        const Matrix x = random_matrix(n1, n2, 3 * seed);
        const Matrix y = random_matrix(n1, n2, 3 * seed + 1);
        const Matrix px = t.apply_PT(x);
        const Matrix qx = t.apply_PTperp(x);
        algebra = std::max({algebra, max_abs(t.apply_PT(px) - px), max_abs(t.apply_PTperp(qx) - qx),
                            max_abs(t.apply_PT(qx)), max_abs(t.apply_PTperp(px)), max_abs(px + qx - x),
                            std::abs(inner(px, y) - inner(x, t.apply_PT(y))),
                            std::abs(inner(qx, y) - inner(x, t.apply_PTperp(y)))});
        const auto basis = oracle::tangent_basis(t.U(), t.V());
        if (basis.size() != t.dim()) return {false, fmt("basis size %zu != dim %zu", basis.size(), t.dim())};
        oracle_gap = std::max(oracle_gap, max_abs(px - oracle::project_onto(basis, x)));
    }
    return {algebra <= 1e-11 && oracle_gap <= 1e-12,
            fmt("max algebra defect %.2e (<= 1e-11), max oracle gap %.2e (<= 1e-12)", algebra, oracle_gap)};
}

// 2. Certificates on the random orthogonal model imply exact recovery.
Outcome certificate_pipeline() {
    const std::size_t n = 40;
    int certified = 0;
    int recovered_when_certified = 0;
    double worst_error = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const LowRankFactors f = random_orthogonal_model(n, n, 1, {}, seed);
        const SampleSet s = sample_uniform(n, n, n * n / 2, 500 + seed);
        Certificate c;
        try {
            c = build_certificate(TangentSpace(f), s);
        } catch (const Error&) {
            continue;
        }
        if (!(c.residual_T <= 1e-8 && c.spectral_Tperp < 1.0)) continue;
        ++certified;
        const Matrix m = f.materialize();
        const double err = rel_error(complete(s, gather(m, s)).X_opt, m);
        worst_error = std::max(worst_error, err);
        recovered_when_certified += err < 1e-3;
    }
    return {certified >= 18 && recovered_when_certified == certified,
            fmt("certified %d/20 (>= 18), recovered %d/%d certified, worst rel error %.2e", certified,
                recovered_when_certified, certified, worst_error)};
}

// 3. Near-isometry at Bernoulli p = 1/2.
Outcome near_isometry() {
    double worst_z = 0.0;
    double lo = 1e300;
    double hi = -1e300;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TangentSpace t(random_orthogonal_model(60, 60, 2, {}, seed));
        const NearIsometry d = near_isometry_deviation(t, sample_bernoulli(60, 60, 0.5, 900 + seed), 0.5);
        worst_z = std::max(worst_z, d.z);
        lo = std::min(lo, d.lambda_min);
        hi = std::max(hi, d.lambda_max);
    }
    return {worst_z < 0.5 && lo >= 0.4 && hi <= 1.6,
            fmt("max z %.4f (< 0.5), spectrum within [%.4f, %.4f] (inside [0.4, 1.6])", worst_z, lo, hi)};
}

// 4. Missing rows and disconnected observation graphs.
Outcome obstructions() {
    const std::size_t n = 12;
    const LowRankFactors f = random_orthogonal_model(n, n, 2, {}, 4);
    std::vector<Index> idx;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != 5) idx.push_back({i, j});
    bool singular = false;
    double lambda_min = 1.0;
    try {
        build_certificate(TangentSpace(f), make_sample_set(n, n, idx));
    } catch (const Error& e) {
        singular = e.code() == ErrorCode::SingularOperator && e.estimate().has_value();
        if (singular) lambda_min = *e.estimate();
    }

    // Two diagonal blocks, each fully observed: every row and column is
    // covered but the bipartite graph splits in two.
    idx.clear();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if ((i < n / 2) == (j < n / 2)) idx.push_back({i, j});
    const SampleSet s = make_sample_set(n, n, idx);
    const FeasibilityReport rep = feasibility_check(s);
    const bool covered = std::all_of(rep.rows_covered.begin(), rep.rows_covered.end(), [](bool b) { return b; }) &&
                         std::all_of(rep.cols_covered.begin(), rep.cols_covered.end(), [](bool b) { return b; });
    // a vᵀ + u bᵀ with a = -u and b = v on the first component's rows and
    // columns, zero elsewhere: x yᵀ minus its sign-flipped twin.
    SplitMix64 rng(8);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    std::vector<double> xf = x;
    std::vector<double> yf = y;
    if (!rep.components.empty()) {
        for (auto i : rep.components[0].rows) xf[i] = -xf[i];
        for (auto j : rep.components[0].cols) yf[j] = -yf[j];
    }
    const Matrix null = outer(x, y) - outer(xf, yf);
    const double on_omega = frobenius_norm(project_omega(null, s));
    const double scale = frobenius_norm(null);
    const bool pass = singular && lambda_min <= 1e-8 && covered && rep.component_count >= 2 && scale > 1.0 &&
                      on_omega <= 1e-15 * scale;
    return {pass, fmt("missing row: SingularOperator=%s lambda_min %.2e (<= 1e-8); split graph: %zu components, "
                      "null matrix norm %.3f, on Omega %.1e",
                      singular ? "yes" : "no", lambda_min, rep.component_count, scale, on_omega)};
}

// 5. Phase-transition spot checks.
Outcome phase_spot_checks() {
    PhaseDiagramConfig easy;
    easy.n = 40;
    easy.m_grid = {800};
    easy.r_grid = {1};
    easy.trials = 50;
    easy.threads = worker_count();
    PhaseDiagramConfig hard = easy;
    hard.m_grid = {160};
    hard.r_grid = {10};
    const PhaseDiagramCell e = phase_diagram(easy).front();
    const PhaseDiagramCell h = phase_diagram(hard).front();
    return {e.successes >= 45 && h.successes <= 2 && std::abs(h.y_axis - 4.375) < 1e-12,
            fmt("r=1 m=800: %zu/50 (>= 45); r=10 m=160 (y=%.3f): %zu/50 (<= 2)", e.successes, h.y_axis,
                h.successes)};
}

// 6. Coherence extremes and the Cauchy–Schwarz bound.
Outcome coherence_extremes() {
    bool exact = true;
    for (std::size_t n : {4, 16, 64})
        for (std::size_t r = 1; r <= n; r *= 2) {
            Matrix spike(n, r);
            Matrix flat(n, r);
            for (std::size_t k = 0; k < r; ++k) spike(k, k) = 1.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < r; ++k)
                    flat(i, k) = (std::popcount(i & k) % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(n));
            exact = exact && coherence_mu(spike) == static_cast<double>(n) / static_cast<double>(r) &&
                    coherence_mu(flat) == 1.0;
        }
    double worst = -1e300;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::size_t r = 1 + seed % 6;
        const LowRankFactors f = seed % 2 == 0 ? random_orthogonal_model(20, 15, r, {}, seed)
                                               : incoherent_basis_model(dct_frame(20, r, seed % 5),
                                                                        dct_frame(15, r, 0), std::vector<double>(r, 1.0),
                                                                        seed);
        const CoherenceProfile p = coherence_profile(f);
        worst = std::max(worst, p.mu1 - p.mu0 * std::sqrt(static_cast<double>(r)));
    }
    {
        Matrix e1(9, 1);
        e1(0, 0) = 1.0;
        const CoherenceProfile p = coherence_profile({e1, {1.0}, e1});
        worst = std::max(worst, p.mu1 - p.mu0);
    }
    return {exact && worst <= 1e-9,
            fmt("identity frames give n/r and flat frames give 1 exactly: %s; max(mu1 - mu0 sqrt r) = %.3e",
                exact ? "yes" : "no", worst)};
}

// 7. 3x3 rank-1 completions against a brute-force search.
Outcome solver_oracle() {
    double worst_nuclear = 0.0;
    double worst_distance = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix m = gaussian_factor_model(3, 1, seed).materialize();
        const SampleSet s = sample_uniform(3, 3, 7, 700 + seed);
        const auto mask = s.mask();
        std::vector<std::pair<std::size_t, std::size_t>> free;
        for (std::size_t k = 0; k < 9; ++k)
            if (!mask[k]) free.push_back({k / 3, k % 3});
        const Matrix base = project_omega(m, s);
        const oracle::BruteForceMinimum brute =
            oracle::min_nuclear_3x3(base, free[0], free[1], 4.0 * frobenius_norm(base) + 1.0);
        const CompletionResult r = complete(s, gather(m, s));
        worst_nuclear = std::max(worst_nuclear, std::abs(oracle::nuclear_norm_3x3(r.X_opt) - brute.nuclear));
        worst_distance = std::max(worst_distance, frobenius_norm(r.X_opt - brute.X));
    }
    return {worst_nuclear <= 1e-4 && worst_distance <= 1e-3,
            fmt("max nuclear-norm gap %.2e (<= 1e-4), max Frobenius distance %.2e (<= 1e-3)", worst_nuclear,
                worst_distance)};
}

// 8. Phase-diagram CSV is identical across runs and thread counts.
Outcome determinism() {
    auto run = [](const char* threads) {
        std::vector<const char*> argv{"mcomplete", "phase-diagram", "--n",      "20",  "--trials", "3",
                                      "--seed",    "5",             "--m-grid", "0.3,0.6,0.9", "--r-grid", "1,2,4",
                                      "--threads", threads};
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        return code == 0 ? out.str() : std::string("exit ") + std::to_string(code) + ": " + err.str();
    };
    const std::string a = run("1");
    const std::string b = run("1");
    const std::string c = run("8");
    const bool ok = a.rfind("n,ensemble,", 0) == 0 && a == b && a == c;
    return {ok, fmt("%zu-byte CSV; repeat run identical: %s; --threads 8 identical: %s", a.size(),
                    a == b ? "yes" : "no", a == c ? "yes" : "no")};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "projector algebra", 10.0, projector_algebra},
        {2, "certificate pipeline", 300.0, certificate_pipeline},
        {3, "near-isometry diagnostic", 120.0, near_isometry},
        {4, "obstructions", 1.0, obstructions},
        {5, "phase-transition spot checks", 1800.0, phase_spot_checks},
        {6, "coherence extremes", 1.0, coherence_extremes},
        {7, "solver vs brute force", 60.0, solver_oracle},
        {8, "phase-diagram determinism", 600.0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool pass = o.pass && seconds < c.budget_seconds;
        failures += !pass;
        std::printf("[%s] criterion %d %s: %s (%.2f s, budget %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), seconds, c.budget_seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
