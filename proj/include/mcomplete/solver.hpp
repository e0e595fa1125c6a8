#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "mcomplete/error.hpp"
#include "mcomplete/linalg.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/sampling.hpp"

namespace mcomplete {

/// Options for the splitting solver.
///
/// The data are rescaled so that the minimum-norm feasible point has unit RMS
/// per measurement; the shrinkage threshold is then 1/penalty in those units.
/// Tolerances are relative: primal residual against max(1, ‖b‖), iterate
/// change against max(1, ‖X‖_F).
struct SolverOptions {
    double penalty = 1.0;
    int max_iter = 5000;
    double tol_primal = 1e-8;
    double tol_dual = 1e-8;
    bool psd = false;
    std::uint64_t seed = 0;
    double relaxation = 1.6; // over-relaxation of the constraint step, in (0, 2)

    void validate() const {
        if (!(penalty > 0.0)) throw Error(ErrorCode::OutOfRange, "solver: penalty must be positive");
        if (max_iter < 1) throw Error(ErrorCode::OutOfRange, "solver: max_iter must be at least 1");
        if (!(tol_primal > 0.0) || !(tol_dual > 0.0))
            throw Error(ErrorCode::OutOfRange, "solver: tolerances must be positive");
        if (!(relaxation > 0.0 && relaxation < 2.0))
            throw Error(ErrorCode::OutOfRange, "solver: relaxation must lie in (0, 2)");
    }
};

struct CompletionResult {
    Matrix X_opt;
    int iterations = 0;
    double primal_residual = 0.0; // constraint violation of the shrinkage iterate
    double nuclear_value = 0.0;   // ‖X_opt‖_*
    bool converged = false;
    bool rank_deficient = false;  // linear measurements had a singular Gram matrix
    std::size_t rank = 0;         // rank of the final shrinkage iterate
};

/// Measurements b_k = ⟨A_k, X⟩.
struct LinearMeasurementSet {
    std::vector<Matrix> operators;
    std::vector<double> values;
    bool orthonormal = false;

    void validate() const {
        if (operators.empty()) throw Error(ErrorCode::OutOfRange, "measurements: need at least one operator");
        if (operators.size() != values.size())
            throw Error(ErrorCode::ShapeMismatch, "measurements: operator and value counts differ");
        for (const auto& a : operators) {
            if (!a.same_shape(operators.front()))
                throw Error(ErrorCode::ShapeMismatch, "measurements: operators differ in shape");
        }
        for (double v : values)
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "measurements: non-finite value");
    }
};

namespace detail {

/// {X : X_ij = b_ij on Ω}. Projection overwrites the observed entries.
class EntryConstraint {
public:
    EntryConstraint(const SampleSet& omega, std::vector<double> values)
        : omega_(omega), values_(std::move(values)), original_(values_) {}

    std::size_t rows() const noexcept { return omega_.rows; }
    std::size_t cols() const noexcept { return omega_.cols; }
    double data_norm() const {
        return std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
    }
    std::size_t count() const noexcept { return values_.size(); }

    Matrix least_norm_point() const { return scatter(omega_, values_); }

    void project(Matrix& x) const {
        for (std::size_t k = 0; k < values_.size(); ++k) x(omega_.indices[k].row, omega_.indices[k].col) = values_[k];
    }

    double residual(const Matrix& x) const {
        double s = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            const double d = x(omega_.indices[k].row, omega_.indices[k].col) - values_[k];
            s += d * d;
        }
        return std::sqrt(s);
    }

    void scale(double s) {
        for (double& v : values_) v *= s;
    }
    void restore() { values_ = original_; }

private:
    const SampleSet& omega_;
    std::vector<double> values_;
    std::vector<double> original_;
};

/// {X : A vec(X) = b}, projected with a once-factored Gram matrix A Aᵀ.
/// Pivots that vanish are dropped, which yields the pseudo-inverse solution
/// on consistent systems.
class LinearConstraint {
public:
    explicit LinearConstraint(const LinearMeasurementSet& meas)
        : rows_(meas.operators.front().rows()), cols_(meas.operators.front().cols()), values_(meas.values),
          original_(meas.values) {
        const std::size_t m = meas.operators.size();
        const std::size_t n = rows_ * cols_;
        a_ = Matrix(m, n);
        for (std::size_t k = 0; k < m; ++k) {
            auto src = meas.operators[k].values();
            std::copy(src.begin(), src.end(), a_.row(k).begin());
        }
        chol_ = matmul_nt(a_, a_);
        double diag_max = 0.0;
        for (std::size_t k = 0; k < m; ++k) diag_max = std::max(diag_max, chol_(k, k));
        const double floor = 1e-10 * std::max(diag_max, 1e-300);
        dropped_.assign(m, false);
        for (std::size_t j = 0; j < m; ++j) {
            auto lj = chol_.row(j);
            double d = lj[j];
            for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
            if (!(d > floor)) {
                dropped_[j] = true;
                rank_deficient_ = true;
                for (std::size_t i = 0; i < m; ++i) chol_(i, j) = 0.0;
                for (std::size_t k = 0; k < m; ++k) chol_(j, k) = 0.0;
                continue;
            }
            const double l = std::sqrt(d);
            lj[j] = l;
            for (std::size_t i = j + 1; i < m; ++i) {
                auto li = chol_.row(i);
                double s = li[j];
                for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
                li[j] = s / l;
            }
            for (std::size_t i = j + 1; i < m; ++i) chol_(j, i) = 0.0;
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t count() const noexcept { return values_.size(); }
    bool rank_deficient() const noexcept { return rank_deficient_; }
    double data_norm() const {
        return std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
    }

    Matrix least_norm_point() const {
        Matrix x(rows_, cols_);
        apply_correction(x, solve(values_), 1.0);
        return x;
    }

    void project(Matrix& x) const {
        std::vector<double> r = measure(x);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] -= values_[k];
        apply_correction(x, solve(std::move(r)), -1.0);
    }

    double residual(const Matrix& x) const {
        const std::vector<double> r = measure(x);
        double s = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) s += (r[k] - values_[k]) * (r[k] - values_[k]);
        return std::sqrt(s);
    }

    void scale(double s) {
        for (double& v : values_) v *= s;
    }
    void restore() { values_ = original_; }

private:
    std::vector<double> measure(const Matrix& x) const {
        std::vector<double> r(a_.rows());
        auto xv = x.values();
        for (std::size_t k = 0; k < a_.rows(); ++k) {
            auto ak = a_.row(k);
            double s = 0.0;
            for (std::size_t i = 0; i < ak.size(); ++i) s += ak[i] * xv[i];
            r[k] = s;
        }
        return r;
    }

    std::vector<double> solve(std::vector<double> b) const {
        const std::size_t m = b.size();
        for (std::size_t i = 0; i < m; ++i) {
            if (dropped_[i]) {
                b[i] = 0.0;
                continue;
            }
            auto li = chol_.row(i);
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
            b[i] = s / li[i];
        }
        for (std::size_t i = m; i-- > 0;) {
            if (dropped_[i]) {
                b[i] = 0.0;
                continue;
            }
            double s = b[i];
            for (std::size_t k = i + 1; k < m; ++k) s -= chol_(k, i) * b[k];
            b[i] = s / chol_(i, i);
        }
        return b;
    }

    void apply_correction(Matrix& x, const std::vector<double>& y, double sign) const {
        auto xv = x.values();
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (y[k] == 0.0) continue;
            const double c = sign * y[k];
            auto ak = a_.row(k);
            for (std::size_t i = 0; i < ak.size(); ++i) xv[i] += c * ak[i];
        }
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
    std::vector<double> original_;
    Matrix a_;
    Matrix chol_;
    std::vector<bool> dropped_;
    bool rank_deficient_ = false;
};

/// Nuclear-norm (or trace over the PSD cone) proximal step with a cached
/// rotation basis from the previous call.
class ShrinkageStep {
public:
    ShrinkageStep(double tau, bool psd) : tau_(tau), psd_(psd) {}

    Matrix operator()(const Matrix& v) {
        if (!psd_) {
            SvdResult dec;
            Matrix out = svt(v, tau_, basis_.empty() ? nullptr : &basis_, &dec);
            rank_ = static_cast<std::size_t>(
                std::count_if(dec.sigma.begin(), dec.sigma.end(), [&](double s) { return s > tau_; }));
            basis_ = rotation_basis(dec, v);
            return out;
        }
        Matrix sym = v;
        for (std::size_t i = 0; i < sym.rows(); ++i)
            for (std::size_t j = i + 1; j < sym.cols(); ++j) {
                const double avg = 0.5 * (v(i, j) + v(j, i));
                sym(i, j) = avg;
                sym(j, i) = avg;
            }
        EigResult e = symmetric_eigen(sym, basis_.empty() ? nullptr : &basis_);
        Matrix out(sym.rows(), sym.cols());
        rank_ = 0;
        for (std::size_t k = 0; k < e.values.size(); ++k) {
            const double lam = e.values[k] - tau_;
            if (lam <= 0.0) break;
            ++rank_;
            for (std::size_t i = 0; i < out.rows(); ++i) {
                const double qi = lam * e.Q(i, k);
                for (std::size_t j = i; j < out.cols(); ++j) out(i, j) += qi * e.Q(j, k);
            }
        }
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
        basis_ = std::move(e.Q);
        return out;
    }

    std::size_t rank() const noexcept { return rank_; }

private:
    double tau_;
    bool psd_;
    Matrix basis_;
    std::size_t rank_ = 0;
};

/// ADMM on  min ‖X‖_* (or trace X, X ⪰ 0)  s.t.  X ∈ C:
///   X ← prox(Z − U),  Z ← P_C(αX + (1−α)Z + U),  U ← U + αX + (1−α)Z_old − Z.
template <class Constraint>
CompletionResult split_solve(Constraint& constraint, const SolverOptions& opts) {
    opts.validate();
    CompletionResult out;
    const std::size_t measurements = constraint.count();

    Matrix z = constraint.least_norm_point();
    const double feasible_norm = frobenius_norm(z);
    const double scale =
        measurements > 0 && feasible_norm > 0.0 ? feasible_norm / std::sqrt(static_cast<double>(measurements)) : 1.0;
    z *= 1.0 / scale;
    constraint.scale(1.0 / scale);

    const double b_norm = constraint.data_norm();
    Matrix u(constraint.rows(), constraint.cols());
    Matrix x;
    ShrinkageStep shrink(1.0 / opts.penalty, opts.psd);
    const double alpha = opts.relaxation;

    for (int it = 1; it <= opts.max_iter; ++it) {
        Matrix v = z;
        v -= u;
        x = shrink(v);
        out.primal_residual = constraint.residual(x);

        Matrix z_next = x;
        z_next *= alpha;
        z_next.axpy(1.0 - alpha, z);
        Matrix relaxed = z_next;
        z_next += u;
        constraint.project(z_next);
        u += relaxed;
        u -= z_next;

        Matrix change = z_next;
        change -= z;
        const double change_norm = frobenius_norm(change);
        z = std::move(z_next);
        out.iterations = it;
        out.rank = shrink.rank();
        if (out.primal_residual <= opts.tol_primal * std::max(1.0, b_norm) &&
            change_norm <= opts.tol_dual * std::max(1.0, frobenius_norm(z))) {
            out.converged = true;
            break;
        }
    }
    if (opts.psd) {
        // Report the PSD iterate; it is feasible to within the primal tolerance.
        out.X_opt = std::move(x);
    } else {
        out.X_opt = std::move(z);
    }
    out.X_opt *= scale;
    out.primal_residual *= scale;
    constraint.restore();
    // Undo the rounding of the rescaling so that X_opt meets the data exactly.
    if (!opts.psd) constraint.project(out.X_opt);
    out.nuclear_value = nuclear_norm(out.X_opt);
    return out;
}

inline void require_observed(const SampleSet& omega, std::span<const double> observed) {
    if (observed.size() != omega.count())
        throw Error(ErrorCode::ShapeMismatch, "observed values must align with the sample set indices");
    for (double v : observed)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "observed values must be finite");
}

/// Refits X_opt at the rank of the shrinkage iterate by alternating least
/// squares on Ω, and keeps the refit only if it lowers the nuclear norm.
inline void polish_low_rank(const SampleSet& omega, std::span<const double> observed, CompletionResult& out) {
    const std::size_t n1 = omega.rows;
    const std::size_t n2 = omega.cols;
    const std::size_t r = out.rank;
    if (r == 0 || r * (n1 + n2 - r) >= omega.count()) return;

    std::vector<std::vector<std::size_t>> by_row(n1), by_col(n2);
    for (std::size_t k = 0; k < omega.count(); ++k) {
        by_row[omega.indices[k].row].push_back(k);
        by_col[omega.indices[k].col].push_back(k);
    }
    const SvdResult d = svd(out.X_opt);
    Matrix a(n1, r), b(n2, r);
    for (std::size_t k = 0; k < r; ++k) {
        const double s = std::sqrt(d.sigma[k]);
        for (std::size_t i = 0; i < n1; ++i) a(i, k) = s * d.U(i, k);
        for (std::size_t j = 0; j < n2; ++j) b(j, k) = s * d.V(j, k);
    }

    // Row-wise least squares: fixed(other index) supplies the regressors.
    auto refit = [&](Matrix& target, const Matrix& fixed, const std::vector<std::vector<std::size_t>>& groups,
                     bool rows) {
        for (std::size_t t = 0; t < target.rows(); ++t) {
            if (groups[t].size() < r) return false;
            Matrix g(r, r);
            std::vector<double> rhs(r, 0.0);
            double trace = 0.0;
            for (std::size_t k : groups[t]) {
                const std::size_t o = rows ? omega.indices[k].col : omega.indices[k].row;
                for (std::size_t p = 0; p < r; ++p) {
                    rhs[p] += observed[k] * fixed(o, p);
                    for (std::size_t q = 0; q <= p; ++q) g(p, q) += fixed(o, p) * fixed(o, q);
                }
            }
            for (std::size_t p = 0; p < r; ++p) {
                trace += g(p, p);
                for (std::size_t q = 0; q < p; ++q) g(q, p) = g(p, q);
            }
            if (!cholesky_lower(g, 1e-13 * trace)) return false;
            const std::vector<double> sol = cholesky_solve(g, std::move(rhs));
            for (std::size_t p = 0; p < r; ++p) target(t, p) = sol[p];
        }
        return true;
    };
    auto misfit = [&] {
        double s = 0.0;
        for (std::size_t k = 0; k < omega.count(); ++k) {
            double v = -observed[k];
            for (std::size_t p = 0; p < r; ++p) v += a(omega.indices[k].row, p) * b(omega.indices[k].col, p);
            s += v * v;
        }
        return std::sqrt(s);
    };

    const double data = std::sqrt(std::inner_product(observed.begin(), observed.end(), observed.begin(), 0.0));
    double previous = misfit();
    for (int sweep = 0; sweep < 200 && previous > 1e-14 * data; ++sweep) {
        if (!refit(a, b, by_row, true) || !refit(b, a, by_col, false)) return;
        const double current = misfit();
        if (current > 0.999 * previous) {
            previous = current;
            break;
        }
        previous = current;
    }

    Matrix candidate = matmul_nt(a, b);
    for (std::size_t k = 0; k < omega.count(); ++k) candidate(omega.indices[k].row, omega.indices[k].col) = observed[k];
    const double value = nuclear_norm(candidate);
    if (value < out.nuclear_value) {
        out.X_opt = std::move(candidate);
        out.nuclear_value = value;
        out.primal_residual = previous;
    }
}

} // namespace detail

/// min ‖X‖_* subject to X_ij = observed on Ω.
inline CompletionResult complete(const SampleSet& omega, std::span<const double> observed, SolverOptions opts = {}) {
    detail::require_observed(omega, observed);
    opts.psd = false;
    detail::EntryConstraint c(omega, {observed.begin(), observed.end()});
    CompletionResult out = detail::split_solve(c, opts);
    detail::polish_low_rank(omega, observed, out);
    return out;
}

/// min trace(X) subject to X_ij = observed on Ω and X ⪰ 0.
inline CompletionResult complete_psd(const SampleSet& omega, std::span<const double> observed, SolverOptions opts = {}) {
    detail::require_observed(omega, observed);
    if (omega.rows != omega.cols) throw Error(ErrorCode::ShapeMismatch, "complete_psd: matrix must be square");
    std::map<Index, double> lookup;
    for (std::size_t k = 0; k < omega.count(); ++k) lookup.emplace(omega.indices[k], observed[k]);
    for (const auto& [ix, v] : lookup) {
        auto mirror = lookup.find({ix.col, ix.row});
        if (mirror != lookup.end() && std::abs(mirror->second - v) > 1e-10 * std::max(1.0, std::abs(v)))
            throw Error(ErrorCode::AsymmetricData, "complete_psd: observed (i,j) and (j,i) disagree");
    }
    opts.psd = true;
    detail::EntryConstraint c(omega, {observed.begin(), observed.end()});
    return detail::split_solve(c, opts);
}

/// min ‖X‖_* subject to ⟨A_k, X⟩ = b_k. Sets rank_deficient when the
/// measurement Gram matrix is singular (the projection then uses its
/// pseudo-inverse).
inline CompletionResult complete_linear(const LinearMeasurementSet& meas, SolverOptions opts = {}) {
    meas.validate();
    detail::LinearConstraint c(meas);
    CompletionResult r = detail::split_solve(c, opts);
    r.rank_deficient = c.rank_deficient();
    return r;
}

} // namespace mcomplete
