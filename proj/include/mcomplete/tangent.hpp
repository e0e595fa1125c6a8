#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mcomplete/ensembles.hpp"
#include "mcomplete/error.hpp"
#include "mcomplete/linalg.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/rng.hpp"
#include "mcomplete/sampling.hpp"

namespace mcomplete {

/// The tangent space T at a rank-r matrix with column space U and row space V:
/// all matrices U Aᵀ + B Vᵀ. Projections are applied through the factors and
/// never form an n1 n2 x n1 n2 operator.
class TangentSpace {
public:
    TangentSpace(Matrix U, Matrix V) : U_(std::move(U)), V_(std::move(V)) {
        if (U_.cols() != V_.cols()) throw Error(ErrorCode::ShapeMismatch, "TangentSpace: U and V ranks differ");
        require_orthonormal(U_, 1e-8, "TangentSpace U");
        require_orthonormal(V_, 1e-8, "TangentSpace V");
    }
    explicit TangentSpace(const LowRankFactors& f) : TangentSpace(f.U, f.V) {}

    std::size_t rows() const noexcept { return U_.rows(); }
    std::size_t cols() const noexcept { return V_.rows(); }
    std::size_t rank() const noexcept { return U_.cols(); }
    std::size_t dim() const noexcept { return rank() * (rows() + cols() - rank()); }
    const Matrix& U() const noexcept { return U_; }
    const Matrix& V() const noexcept { return V_; }

    /// E = Σ_k u_k v_kᵀ.
    Matrix sign_matrix() const { return matmul_nt(U_, V_); }

    /// P_T(X) = P_U X + X P_V − P_U X P_V.
    Matrix apply_PT(const Matrix& x) const {
        require_shape(x, "apply_PT");
        const Matrix ut_x = matmul_tn(U_, x); // r x n2
        const Matrix x_v = matmul(x, V_);     // n1 x r
        const Matrix core = matmul(ut_x, V_); // r x r
        // U (UᵀX − UᵀXV Vᵀ) + XV Vᵀ
        Matrix left = ut_x;
        left -= matmul_nt(core, V_);
        Matrix out = matmul(U_, left);
        out += matmul_nt(x_v, V_);
        return out;
    }

    /// P_T⊥(X) = (I − P_U) X (I − P_V).
    Matrix apply_PTperp(const Matrix& x) const {
        require_shape(x, "apply_PTperp");
        Matrix y = x;
        y -= matmul(U_, matmul_tn(U_, x));
        y -= matmul_nt(matmul(y, V_), V_);
        return y;
    }

private:
    void require_shape(const Matrix& x, const char* where) const {
        if (x.rows() != rows() || x.cols() != cols())
            throw Error(ErrorCode::ShapeMismatch, std::string(where) + ": expected " + std::to_string(rows()) + "x" +
                                                      std::to_string(cols()) + ", got " + x.shape_string());
    }

    Matrix U_;
    Matrix V_;
};

struct SpectrumBounds {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::size_t steps = 0;
    bool converged = false;
};

/// Extreme eigenvalues of a self-adjoint operator on a subspace, by Lanczos
/// with full reorthogonalization. `project` maps into the subspace and is
/// reapplied to every Krylov vector. Ritz values are accepted when their
/// residual estimate β_k |s_k| is below tol·max(1, |θ|).
inline SpectrumBounds lanczos_extremes(const std::function<Matrix(const Matrix&)>& apply,
                                       const std::function<Matrix(const Matrix&)>& project, Matrix start,
                                       std::size_t max_steps, double tol) {
    SpectrumBounds out;
    start = project(start);
    double nrm = frobenius_norm(start);
    if (nrm == 0.0 || max_steps == 0) return out;
    start *= 1.0 / nrm;

    std::vector<Matrix> basis;
    std::vector<double> alpha;
    std::vector<double> beta; // beta[k] couples basis[k] and basis[k+1]
    basis.push_back(std::move(start));
    std::size_t next_check = 8;

    auto ritz = [&](std::size_t k, bool& ok) {
        Matrix t(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < k) {
                t(i, i + 1) = beta[i];
                t(i + 1, i) = beta[i];
            }
        }
        const EigResult e = symmetric_eigen(t);
        const double tail = k <= beta.size() ? beta[k - 1] : 0.0;
        const double res_max = std::abs(tail * e.Q(k - 1, 0));
        const double res_min = std::abs(tail * e.Q(k - 1, k - 1));
        const double lmax = e.values.front();
        const double lmin = e.values.back();
        ok = res_max <= tol * std::max(1.0, std::abs(lmax)) && res_min <= tol * std::max(1.0, std::abs(lmin));
        out.lambda_max = lmax;
        out.lambda_min = lmin;
        out.steps = k;
    };

    for (std::size_t k = 0; k < max_steps; ++k) {
        Matrix w = project(apply(basis[k]));
        const double a = inner(w, basis[k]);
        alpha.push_back(a);
        const double scale = frobenius_norm(w);
        for (int pass = 0; pass < 2; ++pass) {
            for (const Matrix& q : basis) w.axpy(-inner(w, q), q);
            // Cancellation leaves rounding noise outside the subspace.
            w = project(w);
        }
        const double b = frobenius_norm(w);
        beta.push_back(b);
        const std::size_t steps = k + 1;
        const bool breakdown = b <= 1e-10 * std::max(scale, std::abs(a));
        if (breakdown || steps == max_steps || steps == next_check) {
            bool ok = false;
            ritz(steps, ok);
            if (ok || breakdown) {
                out.converged = true;
                return out;
            }
            next_check *= 2;
            if (steps == max_steps) return out;
        }
        w *= 1.0 / b;
        basis.push_back(std::move(w));
    }
    return out;
}

namespace detail {
inline Matrix random_in_tangent(const TangentSpace& t, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return t.apply_PT(gaussian_matrix(t.rows(), t.cols(), rng));
}
} // namespace detail

/// Spectrum of p⁻¹ P_T P_Ω P_T restricted to T.
inline SpectrumBounds sampled_tangent_spectrum(const TangentSpace& t, const SampleSet& omega, double p,
                                               double tol = 1e-10, std::uint64_t seed = 0) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::OutOfRange, "p must lie in (0, 1]");
    if (omega.rows != t.rows() || omega.cols != t.cols())
        throw Error(ErrorCode::ShapeMismatch, "sample set shape differs from tangent space");
    const double inv_p = 1.0 / p;
    auto apply = [&](const Matrix& x) {
        Matrix y = t.apply_PT(project_omega(x, omega));
        y *= inv_p;
        return y;
    };
    auto project = [&](const Matrix& x) { return t.apply_PT(x); };
    SpectrumBounds s = lanczos_extremes(apply, project, detail::random_in_tangent(t, seed), t.dim(), tol);
    // A Krylov space as large as T yields exact Ritz values.
    if (!s.converged && s.steps < t.dim())
        throw Error(ErrorCode::NoConvergence, "Lanczos on the sampled tangent operator did not converge", s.lambda_min);
    return s;
}

struct NearIsometry {
    double z = 0.0; // p⁻¹ ‖P_T P_Ω P_T − p P_T‖
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

/// Deviation of p⁻¹ P_T P_Ω P_T from the identity on T.
inline NearIsometry near_isometry_deviation(const TangentSpace& t, const SampleSet& omega, double p,
                                            double tol = 1e-10, std::uint64_t seed = 0) {
    const SpectrumBounds s = sampled_tangent_spectrum(t, omega, p, tol, seed);
    return {std::max(std::abs(s.lambda_max - 1.0), std::abs(1.0 - s.lambda_min)), s.lambda_min, s.lambda_max};
}

enum class CertificateMethod { normal_equations, neumann };

struct CertificateOptions {
    CertificateMethod method = CertificateMethod::normal_equations;
    std::size_t max_terms = 100;        // Neumann series length
    double tol = 1e-10;                 // residual_T budget, relative to ‖E‖_F
    double injectivity_floor = 1e-10;   // lambda_min at or below this is singular
    double strictness_margin = 1e-6;    // certify only when ‖P_T⊥ Y‖ <= 1 − margin
    std::uint64_t seed = 0;             // Lanczos start vector
};

struct Certificate {
    Matrix Y;
    double residual_T = 0.0;              // ‖P_T(Y) − E‖_F
    double spectral_Tperp = 0.0;          // ‖P_T⊥(Y)‖
    double omega_support_violation = 0.0; // ‖Y off Ω‖_F
    double lambda_min_estimate = 0.0;     // smallest eigenvalue of p⁻¹ P_T P_Ω P_T on T
    std::size_t iterations = 0;
    bool certified = false;
};

/// Dual certificate Y = P_Ω P_T (P_T P_Ω P_T)⁻¹ (E), the minimum-norm matrix
/// supported on Ω whose tangent component is E.
///
/// Throws SingularOperator (estimate = lambda_min) when P_Ω is not injective
/// on T, and NoConvergence when residual_T stays above tol·‖E‖_F.
inline Certificate build_certificate(const TangentSpace& t, const SampleSet& omega,
                                     const CertificateOptions& opts = {}) {
    if (omega.rows != t.rows() || omega.cols != t.cols())
        throw Error(ErrorCode::ShapeMismatch, "build_certificate: sample set shape differs from tangent space");
    if (!(opts.tol > 0.0)) throw Error(ErrorCode::OutOfRange, "build_certificate: tol must be positive");
    const double p = omega.probability();
    if (p <= 0.0) throw Error(ErrorCode::SingularOperator, "no observed entries", 0.0);

    Certificate cert;
    const SpectrumBounds spectrum = sampled_tangent_spectrum(t, omega, p, 1e-10, opts.seed);
    cert.lambda_min_estimate = spectrum.lambda_min;
    if (spectrum.lambda_min <= opts.injectivity_floor)
        throw Error(ErrorCode::SingularOperator, "sampling is not injective on the tangent space", spectrum.lambda_min);

    const Matrix e = t.sign_matrix();
    const double e_norm = frobenius_norm(e);
    auto gram = [&](const Matrix& x) { return t.apply_PT(project_omega(t.apply_PT(x), omega)); };

    Matrix f(t.rows(), t.cols());
    if (opts.method == CertificateMethod::normal_equations) {
        Matrix r = e;
        Matrix d = r;
        double rr = inner(r, r);
        const std::size_t cap = 5 * t.dim();
        const double target = std::min(1e-10, opts.tol) * e_norm;
        while (std::sqrt(rr) > target && cert.iterations < cap) {
            const Matrix q = gram(d);
            const double curvature = inner(d, q);
            if (!(curvature > 1e-300 * inner(d, d)))
                throw Error(ErrorCode::SingularOperator, "nonpositive curvature in conjugate gradients",
                            spectrum.lambda_min);
            const double step = rr / curvature;
            f.axpy(step, d);
            r.axpy(-step, q);
            const double rr_next = inner(r, r);
            d *= rr_next / rr;
            d += r;
            d = t.apply_PT(d);
            rr = rr_next;
            ++cert.iterations;
        }
    } else {
        // F = p⁻¹ Σ_k H^k(E), H = P_T − p⁻¹ P_T P_Ω P_T.
        Matrix term = e;
        for (std::size_t k = 0; k < opts.max_terms; ++k) {
            f += term;
            ++cert.iterations;
            Matrix next = t.apply_PT(term);
            next.axpy(-1.0 / p, gram(term));
            term = std::move(next);
            if (max_abs(term) == 0.0) break;
        }
        f *= 1.0 / p;
    }

    cert.Y = project_omega(t.apply_PT(f), omega);
    {
        const auto mask = omega.mask();
        double off = 0.0;
        auto yv = cert.Y.values();
        for (std::size_t k = 0; k < yv.size(); ++k)
            if (!mask[k]) off += yv[k] * yv[k];
        cert.omega_support_violation = std::sqrt(off);
    }
    Matrix tangent_part = t.apply_PT(cert.Y);
    tangent_part -= e;
    cert.residual_T = frobenius_norm(tangent_part);
    cert.spectral_Tperp = svd(t.apply_PTperp(cert.Y)).sigma.front();
    if (cert.residual_T > opts.tol * e_norm)
        throw Error(ErrorCode::NoConvergence, "certificate residual above tolerance", cert.residual_T);
    cert.certified = cert.residual_T <= 1e-6 * std::sqrt(static_cast<double>(t.rank())) &&
                     cert.spectral_Tperp <= 1.0 - opts.strictness_margin && cert.omega_support_violation == 0.0 &&
                     cert.lambda_min_estimate > opts.injectivity_floor;
    return cert;
}

struct SubgradientCheck {
    bool is_subgradient_form = false;
    double spectral_w = 0.0;
    double residual_T = 0.0;
};

/// Tests whether y = E + W with W in T⊥ and ‖W‖ <= 1.
inline SubgradientCheck verify_subgradient(const TangentSpace& t, const Matrix& y) {
    Matrix tangent_part = t.apply_PT(y);
    tangent_part -= t.sign_matrix();
    SubgradientCheck out;
    out.residual_T = frobenius_norm(tangent_part);
    out.spectral_w = svd(t.apply_PTperp(y)).sigma.front();
    const bool tangent_ok = out.residual_T <= 1e-8 * std::sqrt(static_cast<double>(t.rank()));
    out.is_subgradient_form = tangent_ok && out.spectral_w <= 1.0;
    return out;
}

} // namespace mcomplete
