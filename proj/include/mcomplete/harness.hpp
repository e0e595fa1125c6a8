#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mcomplete/ensembles.hpp"
#include "mcomplete/error.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/rng.hpp"
#include "mcomplete/sampling.hpp"
#include "mcomplete/solver.hpp"

namespace mcomplete {

enum class Ensemble { full, psd, gaussian_measurements };

inline std::string to_string(Ensemble e) {
    switch (e) {
    case Ensemble::full: return "full";
    case Ensemble::psd: return "psd";
    case Ensemble::gaussian_measurements: return "gaussian_measurements";
    }
    return "full";
}

inline Ensemble parse_ensemble(const std::string& s) {
    if (s == "full") return Ensemble::full;
    if (s == "psd") return Ensemble::psd;
    if (s == "gaussian_measurements" || s == "gaussian") return Ensemble::gaussian_measurements;
    throw Error(ErrorCode::ConfigInvalid, "unknown ensemble '" + s + "'");
}

/// Number of measurements that corresponds to x_axis = 1: n² entries, or the
/// n(n+1)/2 free entries of a symmetric matrix.
inline std::size_t measurement_capacity(std::size_t n, Ensemble e) {
    return e == Ensemble::psd ? n * (n + 1) / 2 : n * n;
}

/// Dimension of the rank-r manifold: r(2n − r), or nr − r(r−1)/2 for PSD.
inline double manifold_dimension(std::size_t n, std::size_t r, Ensemble e) {
    const double nd = static_cast<double>(n);
    const double rd = static_cast<double>(r);
    return e == Ensemble::psd ? nd * rd - rd * (rd - 1.0) / 2.0 : rd * (2.0 * nd - rd);
}

struct TrialOutcome {
    bool success = false;
    double rel_error = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// Trial seed for cell (m, r), trial t: nested SplitMix64 hash of
/// (master_seed, m, r, t).
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t m, std::size_t r, std::size_t trial) {
    return hash_combine(hash_combine(hash_combine(master_seed, m), r), trial);
}

/// m i.i.d. standard Gaussian measurement operators applied to M.
inline LinearMeasurementSet gaussian_measurements(const Matrix& truth, std::size_t m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    LinearMeasurementSet meas;
    meas.operators.reserve(m);
    meas.values.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        Matrix a = gaussian_matrix(truth.rows(), truth.cols(), rng);
        meas.values.push_back(inner(a, truth));
        meas.operators.push_back(std::move(a));
    }
    return meas;
}

/// One Monte-Carlo recovery experiment, fully determined by `seed`.
/// Solver errors count as failures.
inline TrialOutcome recovery_trial(std::size_t n, std::size_t m, std::size_t r, Ensemble ensemble,
                                   std::uint64_t seed, const SolverOptions& opts, double threshold = 1e-3) {
    if (r == 0 || r > n) throw Error(ErrorCode::OutOfRange, "recovery_trial: need 1 <= r <= n");
    if (m > measurement_capacity(n, ensemble))
        throw Error(ErrorCode::OutOfRange, "recovery_trial: m exceeds the number of available measurements");
    const std::uint64_t matrix_seed = hash_combine(seed, 0x6d61747269780000ULL);
    const std::uint64_t sample_seed = hash_combine(seed, 0x73616d706c650000ULL);

    const LowRankFactors factors =
        ensemble == Ensemble::psd ? psd_factor_model(n, r, matrix_seed) : gaussian_factor_model(n, r, matrix_seed);
    const Matrix truth = factors.materialize();
    const double truth_norm = frobenius_norm(truth);

    TrialOutcome out;
    try {
        CompletionResult res;
        switch (ensemble) {
        case Ensemble::full: {
            const SampleSet omega = sample_uniform(n, n, m, sample_seed);
            res = complete(omega, gather(truth, omega), opts);
            break;
        }
        case Ensemble::psd: {
            const SampleSet omega = sample_symmetric(n, m, sample_seed);
            SolverOptions psd_opts = opts;
            psd_opts.psd = true;
            res = complete_psd(omega, gather(truth, omega), psd_opts);
            break;
        }
        case Ensemble::gaussian_measurements: {
            if (m == 0) {
                res.X_opt = Matrix(n, n);
                break;
            }
            res = complete_linear(gaussian_measurements(truth, m, sample_seed), opts);
            break;
        }
        }
        Matrix diff = res.X_opt;
        diff -= truth;
        out.rel_error = frobenius_norm(diff) / truth_norm;
        out.iterations = res.iterations;
        out.success = out.rel_error < threshold;
    } catch (const Error&) {
        out.success = false;
    }
    return out;
}

struct PhaseDiagramConfig {
    std::size_t n = 40;
    Ensemble ensemble = Ensemble::full;
    std::vector<std::size_t> m_grid;
    std::vector<std::size_t> r_grid;
    std::size_t trials = 10;
    std::uint64_t master_seed = 0;
    double recovery_threshold = 1e-3;
    SolverOptions solver;
    std::size_t threads = 1;

    void validate() const {
        if (n == 0) throw Error(ErrorCode::ConfigInvalid, "n must be positive");
        if (trials < 1) throw Error(ErrorCode::ConfigInvalid, "trials must be at least 1");
        if (m_grid.empty() || r_grid.empty()) throw Error(ErrorCode::ConfigInvalid, "grids must be nonempty");
        if (!(recovery_threshold > 0.0)) throw Error(ErrorCode::ConfigInvalid, "threshold must be positive");
        for (auto m : m_grid)
            if (m > measurement_capacity(n, ensemble))
                throw Error(ErrorCode::ConfigInvalid, "m = " + std::to_string(m) + " exceeds the measurement capacity");
        for (auto r : r_grid)
            if (r == 0 || r > n) throw Error(ErrorCode::ConfigInvalid, "r = " + std::to_string(r) + " outside [1, n]");
        try {
            solver.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigInvalid, e.what());
        }
    }
};

/// Fractions of the measurement capacity, rounded to the nearest count.
inline std::vector<std::size_t> resolve_m_fractions(const std::vector<double>& fractions, std::size_t n,
                                                    Ensemble ensemble) {
    std::vector<std::size_t> out;
    const double cap = static_cast<double>(measurement_capacity(n, ensemble));
    for (double f : fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::ConfigInvalid, "m fraction outside [0, 1]");
        out.push_back(static_cast<std::size_t>(std::llround(f * cap)));
    }
    return out;
}

/// Ten sampling densities 0.1, 0.2, ..., 1.0 of the measurement capacity.
inline std::vector<std::size_t> default_m_grid(std::size_t n, Ensemble ensemble) {
    std::vector<double> f;
    for (int k = 1; k <= 10; ++k) f.push_back(k / 10.0);
    return resolve_m_fractions(f, n, ensemble);
}

/// Ranks 1..10 spread uniformly over [1, n/4], deduplicated.
inline std::vector<std::size_t> default_r_grid(std::size_t n) {
    std::vector<std::size_t> out;
    const double top = std::max(1.0, static_cast<double>(n) / 4.0);
    for (int k = 0; k < 10; ++k) {
        const auto r = static_cast<std::size_t>(std::llround(1.0 + (top - 1.0) * k / 9.0));
        if (out.empty() || out.back() != r) out.push_back(std::clamp<std::size_t>(r, 1, n));
    }
    return out;
}

struct PhaseDiagramCell {
    std::size_t m = 0;
    std::size_t r = 0;
    std::size_t successes = 0;
    std::size_t trials = 0;
    double rate = 0.0;
    double x_axis = 0.0; // m / n², or m / D_n for PSD
    double y_axis = 0.0; // d_r / m
};

/// Empirical recovery rate on every (m, r) grid point, in row-major (r, m)
/// order. Each trial depends only on its derived seed, so the output does not
/// depend on the thread count.
inline std::vector<PhaseDiagramCell> phase_diagram(const PhaseDiagramConfig& cfg) {
    cfg.validate();
    std::vector<PhaseDiagramCell> cells;
    for (auto r : cfg.r_grid)
        for (auto m : cfg.m_grid) {
            PhaseDiagramCell c;
            c.m = m;
            c.r = r;
            c.trials = cfg.trials;
            c.x_axis = static_cast<double>(m) / static_cast<double>(measurement_capacity(cfg.n, cfg.ensemble));
            c.y_axis = m == 0 ? std::numeric_limits<double>::infinity()
                              : manifold_dimension(cfg.n, r, cfg.ensemble) / static_cast<double>(m);
            cells.push_back(c);
        }

    const std::size_t total = cells.size() * cfg.trials;
    std::vector<unsigned char> success(total, 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) return;
            const PhaseDiagramCell& c = cells[task / cfg.trials];
            const std::size_t t = task % cfg.trials;
            const TrialOutcome o = recovery_trial(cfg.n, c.m, c.r, cfg.ensemble, trial_seed(cfg.master_seed, c.m, c.r, t),
                                                  cfg.solver, cfg.recovery_threshold);
            success[task] = o.success ? 1 : 0;
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, total));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    }

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        std::size_t s = 0;
        for (std::size_t t = 0; t < cfg.trials; ++t) s += success[ci * cfg.trials + t];
        cells[ci].successes = s;
        cells[ci].rate = static_cast<double>(s) / static_cast<double>(cfg.trials);
    }
    return cells;
}

namespace detail {
inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}
} // namespace detail

/// CSV with columns n, ensemble, m, r, trials, successes, rate, x_axis, y_axis.
inline void write_phase_csv(std::ostream& os, const PhaseDiagramConfig& cfg,
                            const std::vector<PhaseDiagramCell>& cells) {
    os << "n,ensemble,m,r,trials,successes,rate,x_axis,y_axis\n";
    for (const auto& c : cells) {
        os << cfg.n << ',' << to_string(cfg.ensemble) << ',' << c.m << ',' << c.r << ',' << c.trials << ','
           << c.successes << ',' << detail::format_real(c.rate) << ',' << detail::format_real(c.x_axis) << ','
           << detail::format_real(c.y_axis) << '\n';
    }
}

namespace detail {
inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T out{};
    std::string rest;
    if (!(is >> out) || (is >> rest)) throw Error(ErrorCode::ConfigInvalid, "bad value for " + key + ": '" + value + "'");
    return out;
}
} // namespace detail

/// Grid entries with a decimal point are fractions of the measurement
/// capacity; plain integers are counts.
inline std::vector<std::size_t> parse_m_grid(const std::string& list, std::size_t n, Ensemble ensemble) {
    std::vector<std::size_t> out;
    for (const auto& item : detail::split_list(list)) {
        if (item.find('.') != std::string::npos)
            out.push_back(resolve_m_fractions({detail::parse_number<double>("m_grid", item)}, n, ensemble).front());
        else
            out.push_back(detail::parse_number<std::size_t>("m_grid", item));
    }
    return out;
}

inline std::vector<std::size_t> parse_r_grid(const std::string& list) {
    std::vector<std::size_t> out;
    for (const auto& item : detail::split_list(list)) out.push_back(detail::parse_number<std::size_t>("r_grid", item));
    return out;
}

/// key=value lines; '#' starts a comment. Keys: n, ensemble, m_grid, r_grid,
/// trials, seed, threshold, threads, penalty, max_iter, tol.
/// Grids are resolved after all keys are read so their order does not matter.
inline PhaseDiagramConfig read_phase_config(std::istream& is, PhaseDiagramConfig cfg = {}) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "expected key=value, got '" + line + "'");
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    for (const auto& [key, value] : kv) {
        if (key == "n") cfg.n = detail::parse_number<std::size_t>(key, value);
        else if (key == "ensemble") cfg.ensemble = parse_ensemble(value);
        else if (key == "trials") cfg.trials = detail::parse_number<std::size_t>(key, value);
        else if (key == "seed") cfg.master_seed = detail::parse_number<std::uint64_t>(key, value);
        else if (key == "threshold") cfg.recovery_threshold = detail::parse_number<double>(key, value);
        else if (key == "threads") cfg.threads = detail::parse_number<std::size_t>(key, value);
        else if (key == "penalty") cfg.solver.penalty = detail::parse_number<double>(key, value);
        else if (key == "max_iter") cfg.solver.max_iter = detail::parse_number<int>(key, value);
        else if (key == "tol") cfg.solver.tol_primal = cfg.solver.tol_dual = detail::parse_number<double>(key, value);
        else if (key != "m_grid" && key != "r_grid") throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "'");
    }
    if (auto it = kv.find("m_grid"); it != kv.end()) cfg.m_grid = parse_m_grid(it->second, cfg.n, cfg.ensemble);
    if (auto it = kv.find("r_grid"); it != kv.end()) cfg.r_grid = parse_r_grid(it->second);
    return cfg;
}

} // namespace mcomplete
