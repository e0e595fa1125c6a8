#pragma once

#include <algorithm>
#include <cmath>

#include "mcomplete/ensembles.hpp"
#include "mcomplete/error.hpp"
#include "mcomplete/matrix.hpp"

namespace mcomplete {

/// μ(U) = (n/r) max_i ‖P_U e_i‖² for an orthonormal n x r frame.
inline double coherence_mu(const Matrix& frame) {
    if (frame.cols() == 0 || frame.rows() == 0) throw Error(ErrorCode::OutOfRange, "coherence_mu: empty frame");
    require_orthonormal(frame, 1e-8, "coherence_mu");
    double worst = 0.0;
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        double s = 0.0;
        for (double x : frame.row(i)) s += x * x;
        worst = std::max(worst, s);
    }
    return static_cast<double>(frame.rows()) / static_cast<double>(frame.cols()) * worst;
}

struct CoherenceProfile {
    double mu_u = 1.0;
    double mu_v = 1.0;
    double mu0 = 1.0; // max(mu_u, mu_v)
    double mu1 = 1.0; // ‖Σ u_k v_kᵀ‖_∞ √(n1 n2 / r)
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t r = 0;
};

inline CoherenceProfile coherence_profile(const LowRankFactors& f) {
    CoherenceProfile p;
    p.n1 = f.rows();
    p.n2 = f.cols();
    p.r = f.rank();
    p.mu_u = coherence_mu(f.U);
    p.mu_v = coherence_mu(f.V);
    p.mu0 = std::max(p.mu_u, p.mu_v);
    const double n1n2 = static_cast<double>(p.n1) * static_cast<double>(p.n2);
    p.mu1 = max_abs(f.sign_matrix()) * std::sqrt(n1n2 / static_cast<double>(p.r));
    return p;
}

struct SampleBounds {
    double m_general = 0.0;
    double m_small_rank = 0.0;
    bool small_rank_valid = false;
};

/// Sufficient sample sizes
///   general:    C max(μ1², √μ0 μ1, μ0 n^{1/4}) n r β log n
///   small rank: C μ0 n^{6/5} r β log n,  valid when r <= n^{1/5} / μ0
/// with natural log and a caller-chosen constant C.
inline SampleBounds sample_bound(std::size_t n, std::size_t r, double mu0, double mu1, double beta,
                                 double constant = 1.0) {
    if (!(beta > 2.0)) throw Error(ErrorCode::OutOfRange, "sample_bound: beta must exceed 2");
    if (!(constant > 0.0)) throw Error(ErrorCode::OutOfRange, "sample_bound: constant must be positive");
    const double nd = static_cast<double>(n);
    const double rd = static_cast<double>(r);
    const double log_term = beta * std::log(nd);
    const double lead = std::max({mu1 * mu1, std::sqrt(mu0) * mu1, mu0 * std::pow(nd, 0.25)});
    SampleBounds b;
    b.m_general = constant * lead * nd * rd * log_term;
    b.m_small_rank = constant * mu0 * std::pow(nd, 1.2) * rd * log_term;
    b.small_rank_valid = rd <= std::pow(nd, 0.2) / mu0;
    return b;
}

} // namespace mcomplete
