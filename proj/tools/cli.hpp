#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcomplete/mcomplete.hpp"

namespace mcomplete::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_domain = 1;
inline constexpr int exit_usage = 2;

/// Directory that relative phase-diagram outputs are written to, if set.
inline constexpr const char* output_dir_env = "MCOMPLETE_OUTPUT_DIR";

namespace detail {

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "' for reading");
    return in;
}

template <class Fn>
void write_to(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(fallback);
        return;
    }
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::Parse, "cannot open '" + path + "' for writing");
    fn(os);
}

inline std::string real(double x) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << x;
    return os.str();
}

inline std::vector<double> parse_reals(const std::string& list) {
    std::vector<double> out;
    std::istringstream is(list);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw Error(ErrorCode::Parse, "bad number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

inline Matrix load_matrix_or_factors(const std::string& matrix_path, const std::string& factors_path) {
    if (!matrix_path.empty()) {
        auto in = open_in(matrix_path);
        return read_matrix(in);
    }
    auto in = open_in(factors_path);
    return read_factors(in).materialize();
}

} // namespace detail

/// Entry point of the command-line tool. Returns 0 on success, 1 on domain
/// errors (bad files, failed certification, library errors) and 2 on usage
/// errors.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Low-rank matrix completion by nuclear-norm minimization", "mcomplete"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Draw a random low-rank matrix and write its factors");
    std::string gen_model = "orthogonal";
    std::size_t gen_n1 = 0;
    std::size_t gen_n2 = 0;
    std::size_t gen_rank = 1;
    std::uint64_t gen_seed = 0;
    std::string gen_sigma;
    std::string gen_out;
    std::string gen_matrix_out;
    gen->add_option("--model", gen_model, "orthogonal | gaussian | psd | incoherent")
        ->check(CLI::IsMember({"orthogonal", "gaussian", "psd", "incoherent"}));
    gen->add_option("--n1,--n", gen_n1, "Rows")->required();
    gen->add_option("--n2", gen_n2, "Columns (defaults to n1)");
    gen->add_option("--rank,-r", gen_rank, "Rank")->required();
    gen->add_option("--seed", gen_seed, "Seed");
    gen->add_option("--sigma", gen_sigma, "Comma-separated singular values (orthogonal/incoherent)");
    gen->add_option("--out", gen_out, "Factors file (default: standard output)");
    gen->add_option("--matrix-out", gen_matrix_out, "Also write the dense matrix here");

    // sample
    auto* smp = app.add_subcommand("sample", "Sample entries of a matrix into an observed-entry file");
    std::string smp_matrix;
    std::string smp_factors;
    std::string smp_model = "uniform";
    std::size_t smp_m = 0;
    double smp_p = 0.0;
    std::uint64_t smp_seed = 0;
    std::string smp_out;
    auto* smp_matrix_opt = smp->add_option("--matrix", smp_matrix, "Dense matrix file");
    auto* smp_factors_opt = smp->add_option("--factors", smp_factors, "Factors file");
    smp_matrix_opt->excludes(smp_factors_opt);
    smp->add_option("--model", smp_model, "uniform | bernoulli | symmetric")
        ->check(CLI::IsMember({"uniform", "bernoulli", "symmetric"}));
    smp->add_option("--m", smp_m, "Number of entries (uniform) or pairs (symmetric)");
    smp->add_option("--p", smp_p, "Inclusion probability (bernoulli)");
    smp->add_option("--seed", smp_seed, "Seed");
    smp->add_option("--out", smp_out, "Observed-entry file (default: standard output)");

    // complete
    auto* cmp = app.add_subcommand("complete", "Nuclear-norm completion of an observed-entry file");
    std::string cmp_observed;
    std::string cmp_out;
    std::string cmp_truth;
    bool cmp_psd = false;
    SolverOptions cmp_opts;
    double cmp_tol = cmp_opts.tol_primal;
    cmp->add_option("--observed", cmp_observed, "Observed-entry file")->required();
    cmp->add_option("--out", cmp_out, "Dense output file for X_opt (default: standard output)");
    cmp->add_option("--truth", cmp_truth, "Dense matrix to report the relative error against");
    cmp->add_flag("--psd", cmp_psd, "Minimize the trace over positive semidefinite matrices");
    cmp->add_option("--tol", cmp_tol, "Primal and dual tolerance");
    cmp->add_option("--max-iter", cmp_opts.max_iter, "Iteration budget");
    cmp->add_option("--penalty", cmp_opts.penalty, "Splitting penalty");

    // certify
    auto* cert = app.add_subcommand("certify", "Build and check the dual certificate for given factors");
    std::string cert_factors;
    std::string cert_observed;
    std::string cert_method = "normal_equations";
    CertificateOptions cert_opts;
    cert->add_option("--factors", cert_factors, "Factors file")->required();
    cert->add_option("--observed", cert_observed, "Observed-entry file (values are ignored)")->required();
    cert->add_option("--method", cert_method, "normal_equations | neumann")
        ->check(CLI::IsMember({"normal_equations", "neumann"}));
    cert->add_option("--max-terms", cert_opts.max_terms, "Neumann series length");
    cert->add_option("--tol", cert_opts.tol, "Residual tolerance relative to ‖E‖_F");

    // coherence
    auto* coh = app.add_subcommand("coherence", "Print the coherence profile of a factors file");
    std::string coh_factors;
    double coh_beta = 3.0;
    double coh_constant = 1.0;
    coh->add_option("--factors", coh_factors, "Factors file")->required();
    coh->add_option("--beta", coh_beta, "Probability exponent for the sample bounds (> 2)");
    coh->add_option("--constant", coh_constant, "Constant multiplying the sample bounds");

    // phase-diagram
    auto* pd = app.add_subcommand("phase-diagram", "Empirical recovery rates over an (m, r) grid, as CSV");
    PhaseDiagramConfig pd_cfg;
    std::string pd_config;
    std::string pd_ensemble = "full";
    std::string pd_m_grid;
    std::string pd_r_grid;
    std::string pd_out;
    double pd_tol = pd_cfg.solver.tol_primal;
    bool pd_full_scale = false;
    pd->add_option("--config", pd_config, "key=value configuration file; flags override it");
    auto* pd_n = pd->add_option("--n", pd_cfg.n, "Matrix size");
    auto* pd_ens = pd->add_option("--ensemble", pd_ensemble, "full | psd | gaussian_measurements")
                       ->check(CLI::IsMember({"full", "psd", "gaussian_measurements"}));
    auto* pd_trials = pd->add_option("--trials", pd_cfg.trials, "Trials per cell");
    auto* pd_seed = pd->add_option("--seed", pd_cfg.master_seed, "Master seed");
    auto* pd_m = pd->add_option("--m-grid", pd_m_grid, "Comma list; entries with '.' are fractions of capacity");
    auto* pd_r = pd->add_option("--r-grid", pd_r_grid, "Comma list of ranks");
    auto* pd_thr = pd->add_option("--threshold", pd_cfg.recovery_threshold, "Relative error counted as recovery");
    auto* pd_threads = pd->add_option("--threads", pd_cfg.threads, "Worker threads");
    auto* pd_pen = pd->add_option("--penalty", pd_cfg.solver.penalty, "Splitting penalty");
    auto* pd_iter = pd->add_option("--max-iter", pd_cfg.solver.max_iter, "Iteration budget");
    auto* pd_tol_opt = pd->add_option("--tol", pd_tol, "Primal and dual tolerance");
    pd->add_flag("--full-scale", pd_full_scale, "n = 50 and 50 trials per cell unless --n or --trials is given (long-running)");
    pd->add_option("--out", pd_out, "CSV output path (default: standard output)");

    // check-omega
    auto* chk = app.add_subcommand("check-omega", "Row/column coverage and connectivity of an observed set");
    std::string chk_observed;
    chk->add_option("--observed", chk_observed, "Observed-entry file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    try {
        if (gen->parsed()) {
            if (gen_n2 == 0) gen_n2 = gen_n1;
            std::vector<double> sigma = detail::parse_reals(gen_sigma);
            LowRankFactors f;
            if (gen_model == "orthogonal") {
                f = random_orthogonal_model(gen_n1, gen_n2, gen_rank, sigma, gen_seed);
            } else if (gen_model == "incoherent") {
                if (sigma.empty()) sigma.assign(gen_rank, 1.0);
                f = incoherent_basis_model(dct_frame(gen_n1, gen_rank, 1), dct_frame(gen_n2, gen_rank, 1), sigma,
                                           gen_seed);
            } else {
                if (gen_n2 != gen_n1) {
                    err << "error: --model " << gen_model << " requires a square matrix\n";
                    return exit_usage;
                }
                f = gen_model == "gaussian" ? gaussian_factor_model(gen_n1, gen_rank, gen_seed)
                                            : psd_factor_model(gen_n1, gen_rank, gen_seed);
            }
            detail::write_to(gen_out, out, [&](std::ostream& os) { write_factors(os, f); });
            if (!gen_matrix_out.empty())
                detail::write_to(gen_matrix_out, out, [&](std::ostream& os) { write_matrix(os, f.materialize()); });
            return exit_ok;
        }

        if (smp->parsed()) {
            if (smp_matrix.empty() == smp_factors.empty()) {
                err << "error: sample needs exactly one of --matrix or --factors\n\n" << smp->help();
                return exit_usage;
            }
            const Matrix a = detail::load_matrix_or_factors(smp_matrix, smp_factors);
            SampleSet omega;
            if (smp_model == "uniform") {
                omega = sample_uniform(a.rows(), a.cols(), smp_m, smp_seed);
            } else if (smp_model == "bernoulli") {
                omega = sample_bernoulli(a.rows(), a.cols(), smp_p, smp_seed);
            } else {
                if (a.rows() != a.cols()) throw Error(ErrorCode::ShapeMismatch, "symmetric sampling needs a square matrix");
                omega = sample_symmetric(a.rows(), smp_m, smp_seed);
            }
            const auto values = gather(a, omega);
            detail::write_to(smp_out, out, [&](std::ostream& os) { write_observed(os, omega, values); });
            return exit_ok;
        }

        if (cmp->parsed()) {
            auto in = detail::open_in(cmp_observed);
            const ObservedEntries obs = read_observed(in);
            cmp_opts.tol_primal = cmp_opts.tol_dual = cmp_tol;
            const CompletionResult res =
                cmp_psd ? complete_psd(obs.omega, obs.values, cmp_opts) : complete(obs.omega, obs.values, cmp_opts);
            // The matrix goes to --out; the report to standard output (or
            // standard error when the matrix itself is on standard output).
            std::ostream& report = cmp_out.empty() || cmp_out == "-" ? err : out;
            detail::write_to(cmp_out, out, [&](std::ostream& os) { write_matrix(os, res.X_opt); });
            report << "iterations=" << res.iterations << '\n'
                   << "primal_residual=" << detail::real(res.primal_residual) << '\n'
                   << "nuclear_value=" << detail::real(res.nuclear_value) << '\n'
                   << "converged=" << (res.converged ? "true" : "false") << '\n';
            if (!cmp_truth.empty()) {
                auto tin = detail::open_in(cmp_truth);
                const Matrix truth = read_matrix(tin);
                truth.require_same_shape(res.X_opt, "truth");
                report << "rel_error=" << detail::real(frobenius_norm(res.X_opt - truth) / frobenius_norm(truth))
                       << '\n';
            }
            return exit_ok;
        }

        if (cert->parsed()) {
            auto fin = detail::open_in(cert_factors);
            const LowRankFactors f = read_factors(fin);
            auto oin = detail::open_in(cert_observed);
            const ObservedEntries obs = read_observed(oin);
            cert_opts.method =
                cert_method == "neumann" ? CertificateMethod::neumann : CertificateMethod::normal_equations;
            const TangentSpace t(f);
            try {
                const Certificate c = build_certificate(t, obs.omega, cert_opts);
                out << "residual_T=" << detail::real(c.residual_T) << '\n'
                    << "spectral_Tperp=" << detail::real(c.spectral_Tperp) << '\n'
                    << "omega_support_violation=" << detail::real(c.omega_support_violation) << '\n'
                    << "lambda_min_estimate=" << detail::real(c.lambda_min_estimate) << '\n'
                    << "iterations=" << c.iterations << '\n'
                    << "certified=" << (c.certified ? "true" : "false") << '\n';
                return c.certified ? exit_ok : exit_domain;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::SingularOperator && e.code() != ErrorCode::NoConvergence) throw;
                out << "error=" << to_string(e.code()) << '\n';
                if (e.estimate())
                    out << (e.code() == ErrorCode::SingularOperator ? "lambda_min_estimate=" : "residual_T=")
                        << detail::real(*e.estimate()) << '\n';
                out << "certified=false\n";
                return exit_domain;
            }
        }

        if (coh->parsed()) {
            auto in = detail::open_in(coh_factors);
            const LowRankFactors f = read_factors(in);
            const CoherenceProfile p = coherence_profile(f);
            out << "n1=" << p.n1 << '\n'
                << "n2=" << p.n2 << '\n'
                << "r=" << p.r << '\n'
                << "mu_u=" << detail::real(p.mu_u) << '\n'
                << "mu_v=" << detail::real(p.mu_v) << '\n'
                << "mu0=" << detail::real(p.mu0) << '\n'
                << "mu1=" << detail::real(p.mu1) << '\n';
            const SampleBounds b = sample_bound(std::max(p.n1, p.n2), p.r, p.mu0, p.mu1, coh_beta, coh_constant);
            out << "m_general=" << detail::real(b.m_general) << '\n'
                << "m_small_rank=" << detail::real(b.m_small_rank) << '\n'
                << "small_rank_valid=" << (b.small_rank_valid ? "true" : "false") << '\n';
            return exit_ok;
        }

        if (pd->parsed()) {
            PhaseDiagramConfig cfg;
            if (!pd_config.empty()) {
                auto in = detail::open_in(pd_config);
                cfg = read_phase_config(in, cfg);
            }
            if (pd_full_scale) {
                cfg.trials = 50;
                cfg.n = 50;
            }
            if (pd_n->count()) cfg.n = pd_cfg.n;
            if (pd_ens->count()) cfg.ensemble = parse_ensemble(pd_ensemble);
            if (pd_trials->count()) cfg.trials = pd_cfg.trials;
            if (pd_seed->count()) cfg.master_seed = pd_cfg.master_seed;
            if (pd_thr->count()) cfg.recovery_threshold = pd_cfg.recovery_threshold;
            if (pd_threads->count()) cfg.threads = pd_cfg.threads;
            if (pd_pen->count()) cfg.solver.penalty = pd_cfg.solver.penalty;
            if (pd_iter->count()) cfg.solver.max_iter = pd_cfg.solver.max_iter;
            if (pd_tol_opt->count()) cfg.solver.tol_primal = cfg.solver.tol_dual = pd_tol;
            if (pd_m->count()) cfg.m_grid = parse_m_grid(pd_m_grid, cfg.n, cfg.ensemble);
            if (pd_r->count()) cfg.r_grid = parse_r_grid(pd_r_grid);
            if (cfg.m_grid.empty()) cfg.m_grid = default_m_grid(cfg.n, cfg.ensemble);
            if (cfg.r_grid.empty()) cfg.r_grid = default_r_grid(cfg.n);

            std::string path = pd_out;
            if (const char* dir = std::getenv(output_dir_env); dir != nullptr && *dir != '\0' && !path.empty() &&
                                                               path != "-" && std::filesystem::path(path).is_relative())
                path = (std::filesystem::path(dir) / path).string();

            const auto cells = phase_diagram(cfg);
            detail::write_to(path, out, [&](std::ostream& os) { write_phase_csv(os, cfg, cells); });
            return exit_ok;
        }

        if (chk->parsed()) {
            auto in = detail::open_in(chk_observed);
            const ObservedEntries obs = read_observed(in);
            const FeasibilityReport rep = feasibility_check(obs.omega);
            auto list_missing = [](const std::vector<bool>& covered) {
                std::string s;
                for (std::size_t i = 0; i < covered.size(); ++i)
                    if (!covered[i]) s += (s.empty() ? "" : ",") + std::to_string(i + 1);
                return s;
            };
            out << "uncovered_rows=" << list_missing(rep.rows_covered) << '\n'
                << "uncovered_cols=" << list_missing(rep.cols_covered) << '\n'
                << "component_count=" << rep.component_count << '\n'
                << "rank1_recoverable=" << (rep.rank1_recoverable ? "true" : "false") << '\n';
            return exit_ok;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_domain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_domain;
    }
    err << app.help();
    return exit_usage;
}

} // namespace mcomplete::cli
