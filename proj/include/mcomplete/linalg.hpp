#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "mcomplete/error.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/rng.hpp"

namespace mcomplete {

enum class SvdMode { thin, full };

/// a = U diag(sigma) Vᵀ, sigma nonincreasing.
struct SvdResult {
    Matrix U;
    std::vector<double> sigma;
    Matrix V;

    Matrix reconstruct() const {
        Matrix out(U.rows(), V.rows());
        for (std::size_t k = 0; k < sigma.size(); ++k) {
            for (std::size_t i = 0; i < U.rows(); ++i) {
                const double us = sigma[k] * U(i, k);
                if (us == 0.0) continue;
                auto oi = out.row(i);
                for (std::size_t j = 0; j < V.rows(); ++j) oi[j] += us * V(j, k);
            }
        }
        return out;
    }
};

/// Symmetric eigendecomposition s = Q diag(values) Qᵀ, values nonincreasing.
struct EigResult {
    std::vector<double> values;
    Matrix Q;
};

namespace detail {

/// Extend the first `filled` orthonormal columns of q to a full orthonormal set
/// by Gram-Schmidt, each time taking the standard basis vector with the
/// largest component outside the current span.
inline void complete_orthonormal_columns(Matrix& q, std::size_t filled) {
    const std::size_t m = q.rows();
    std::vector<double> cand(m);
    std::vector<double> best(m);
    for (std::size_t col = filled; col < q.cols(); ++col) {
        double best_norm = 0.0;
        for (std::size_t e = 0; e < m; ++e) {
            std::fill(cand.begin(), cand.end(), 0.0);
            cand[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < col; ++k) {
                    double d = 0.0;
                    for (std::size_t i = 0; i < m; ++i) d += q(i, k) * cand[i];
                    for (std::size_t i = 0; i < m; ++i) cand[i] -= d * q(i, k);
                }
            }
            double nrm = 0.0;
            for (double x : cand) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > best_norm) {
                best_norm = nrm;
                best = cand;
            }
        }
        if (best_norm < 1e-8) throw Error(ErrorCode::NoConvergence, "cannot complete orthonormal basis");
        for (std::size_t i = 0; i < m; ++i) q(i, col) = best[i] / best_norm;
    }
}

/// One-sided (Hestenes) Jacobi on the rows of `w` (each row is one column of
/// the matrix being decomposed). Rotations are mirrored onto the rows of `v`.
inline void hestenes_sweeps(Matrix& w, Matrix& v) {
    const std::size_t n = w.rows();
    const std::size_t m = w.cols();
    // Dot products carry rounding of order m·ε relative to the column norms.
    const double eps = 2.220446049250313e-16 * static_cast<double>(std::max<std::size_t>(m, 4));
    constexpr int max_sweeps = 80;
    std::vector<double> norms(n);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        double largest = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            auto wp0 = w.row(p);
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += wp0[i] * wp0[i];
            norms[p] = s;
            largest = std::max(largest, s);
        }
        // Numerically zero columns are left alone; their U directions are
        // rebuilt by Gram-Schmidt afterwards.
        const double negligible = largest * 1e-30;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                auto wp = w.row(p);
                auto wq = w.row(q);
                double alpha = norms[p];
                double beta = norms[q];
                if (alpha <= negligible || beta <= negligible) continue;
                double gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) gamma += wp[i] * wq[i];
                if (gamma == 0.0) continue;
                // Running norms lose accuracy on small columns; refresh those.
                if (alpha < 1e-8 * largest || beta < 1e-8 * largest) {
                    alpha = 0.0;
                    beta = 0.0;
                    for (std::size_t i = 0; i < m; ++i) {
                        alpha += wp[i] * wp[i];
                        beta += wq[i] * wq[i];
                    }
                }
                if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double a = wp[i];
                    const double b = wq[i];
                    wp[i] = c * a - sn * b;
                    wq[i] = sn * a + c * b;
                }
                auto vp = v.row(p);
                auto vq = v.row(q);
                for (std::size_t i = 0; i < v.cols(); ++i) {
                    const double a = vp[i];
                    const double b = vq[i];
                    vp[i] = c * a - sn * b;
                    vq[i] = sn * a + c * b;
                }
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        if (!rotated) return;
    }
    throw Error(ErrorCode::NoConvergence, "one-sided Jacobi SVD did not converge");
}

/// SVD of a tall-or-square a (rows >= cols), optionally warm-started with an
/// orthogonal cols x cols right basis that nearly diagonalizes aᵀa.
inline SvdResult svd_tall(const Matrix& a, SvdMode mode, const Matrix* warm_v) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    // Rows of w hold the columns of a·V0; rows of vt hold the columns of V0.
    Matrix w;
    Matrix vt;
    if (warm_v != nullptr && warm_v->rows() == n && warm_v->cols() == n) {
        w = matmul(a, *warm_v).transposed();
        vt = warm_v->transposed();
    } else {
        w = a.transposed();
        vt = Matrix::identity(n);
    }
    hestenes_sweeps(w, vt);

    std::vector<double> norms(n);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (double x : w.row(k)) s += x * x;
        norms[k] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    SvdResult out;
    out.sigma.resize(n);
    const std::size_t ucols = mode == SvdMode::full ? m : n;
    out.U = Matrix(m, ucols);
    out.V = Matrix(n, n);
    // Directions of numerically zero columns are rebuilt by Gram-Schmidt.
    const double cutoff = std::max((norms.empty() ? 0.0 : norms[order[0]]) * 1e-13, 1e-300);
    std::size_t filled = 0;
    bool contiguous = true;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.sigma[k] = norms[src];
        for (std::size_t i = 0; i < n; ++i) out.V(i, k) = vt(src, i);
        if (norms[src] > cutoff && contiguous) {
            for (std::size_t i = 0; i < m; ++i) out.U(i, k) = w(src, i) / norms[src];
            ++filled;
        } else {
            contiguous = false;
        }
    }
    if (filled < ucols) detail::complete_orthonormal_columns(out.U, filled);
    return out;
}

} // namespace detail

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Thin mode returns k = min(rows, cols) singular triplets; full mode returns
/// square U and V with sigma still of length k. `warm_right` (cols x cols
/// orthogonal, or rows x rows for wide inputs) seeds the rotation basis and
/// only affects speed, not the contract.
inline SvdResult svd(const Matrix& a, SvdMode mode = SvdMode::thin, const Matrix* warm_right = nullptr) {
    require_finite(a, "svd");
    // Column norms are accumulated as squares; rescale extreme inputs by an
    // exact power of two so they neither underflow nor overflow.
    const double peak = max_abs(a);
    int exponent = 0;
    if (peak > 0.0 && (peak < 0x1p-400 || peak > 0x1p400)) std::frexp(peak, &exponent);
    if (exponent != 0) {
        Matrix scaled = a;
        for (double& x : scaled.values()) x = std::ldexp(x, -exponent);
        SvdResult r = svd(scaled, mode, warm_right);
        for (double& s : r.sigma) s = std::ldexp(s, exponent);
        return r;
    }
    if (a.rows() >= a.cols()) {
        return detail::svd_tall(a, mode, warm_right);
    }
    SvdResult r = detail::svd_tall(a.transposed(), mode, warm_right);
    std::swap(r.U, r.V);
    return r;
}

/// The square orthogonal factor that svd() rotates internally (V for tall
/// inputs, U for wide ones); pass it back as `warm_right` for a nearby matrix.
inline const Matrix& rotation_basis(const SvdResult& r, const Matrix& a) noexcept {
    return a.rows() >= a.cols() ? r.V : r.U;
}

inline double nuclear_norm(const Matrix& a) {
    const SvdResult r = svd(a);
    return std::accumulate(r.sigma.begin(), r.sigma.end(), 0.0);
}

/// Top singular value by power iteration on aᵀa from a seeded Gaussian start.
///
/// Stops once the eigen-residual ‖aᵀa x − θx‖ drops to tol·θ. Throws
/// NoConvergence carrying the last estimate if max_iter is exhausted.
inline double spectral_norm(const Matrix& a, double tol = 1e-10, int max_iter = 100000, std::uint64_t seed = 0) {
    if (!(tol > 0.0)) throw Error(ErrorCode::OutOfRange, "spectral_norm: tol must be positive");
    require_finite(a, "spectral_norm");
    if (max_abs(a) == 0.0) return 0.0;
    const std::size_t n = a.cols();
    SplitMix64 rng(seed);
    std::vector<double> x(n);
    std::vector<double> ax(a.rows());
    std::vector<double> y(n);
    double nrm = 0.0;
    for (double& xi : x) {
        xi = rng.normal();
        nrm += xi * xi;
    }
    nrm = std::sqrt(nrm);
    for (double& xi : x) xi /= nrm;

    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        std::fill(ax.begin(), ax.end(), 0.0);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            auto ai = a.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += ai[j] * x[j];
            ax[i] = s;
        }
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            auto ai = a.row(i);
            for (std::size_t j = 0; j < n; ++j) y[j] += ai[j] * ax[i];
        }
        double theta = 0.0;
        for (std::size_t j = 0; j < n; ++j) theta += x[j] * y[j];
        sigma = std::sqrt(std::max(theta, 0.0));
        double res = 0.0;
        double ynorm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = y[j] - theta * x[j];
            res += d * d;
            ynorm += y[j] * y[j];
        }
        if (std::sqrt(res) <= tol * theta) return sigma;
        ynorm = std::sqrt(ynorm);
        if (ynorm == 0.0) return 0.0; // start vector in the null space
        for (std::size_t j = 0; j < n; ++j) x[j] = y[j] / ynorm;
    }
    throw Error(ErrorCode::NoConvergence, "spectral_norm: power iteration budget exhausted", sigma);
}

/// Singular value soft-thresholding: U diag(max(sigma - tau, 0)) Vᵀ.
inline Matrix svt(const Matrix& a, double tau, const Matrix* warm_right = nullptr, SvdResult* decomposition = nullptr) {
    if (!(tau >= 0.0)) throw Error(ErrorCode::OutOfRange, "svt: tau must be nonnegative");
    SvdResult r = svd(a, SvdMode::thin, warm_right);
    Matrix out(a.rows(), a.cols());
    for (std::size_t k = 0; k < r.sigma.size(); ++k) {
        const double s = r.sigma[k] - tau;
        if (s <= 0.0) break;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double ui = s * r.U(i, k);
            if (ui == 0.0) continue;
            auto oi = out.row(i);
            for (std::size_t j = 0; j < a.cols(); ++j) oi[j] += ui * r.V(j, k);
        }
    }
    if (decomposition != nullptr) *decomposition = std::move(r);
    return out;
}

/// Cyclic Jacobi eigensolver for symmetric s. `warm_q`, when given, is an
/// orthogonal basis that nearly diagonalizes s.
inline EigResult symmetric_eigen(const Matrix& s, const Matrix* warm_q = nullptr) {
    if (s.rows() != s.cols()) throw Error(ErrorCode::ShapeMismatch, "symmetric_eigen: matrix is not square");
    require_finite(s, "symmetric_eigen");
    const std::size_t n = s.rows();
    Matrix a;
    Matrix qt; // rows are eigenvectors
    if (warm_q != nullptr && warm_q->rows() == n && warm_q->cols() == n) {
        a = matmul_tn(*warm_q, matmul(s, *warm_q));
        qt = warm_q->transposed();
    } else {
        a = s;
        qt = Matrix::identity(n);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = avg;
            a(j, i) = avg;
        }

    constexpr int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off == 0.0 || off <= 1e-32 * diag) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                if (std::abs(apq) <= 1e-18 * std::sqrt(std::abs(a(p, p) * a(q, q)))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                auto qp = qt.row(p);
                auto qq = qt.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = qp[k];
                    const double y = qq[k];
                    qp[k] = c * x - sn * y;
                    qq[k] = sn * x + c * y;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    EigResult out;
    out.values.resize(n);
    out.Q = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.Q(i, k) = qt(order[k], i);
    }
    return out;
}

/// Householder QR; returns Q (rows x cols, orthonormal columns) with the
/// diagonal of R made nonnegative so that Q is unique for full-rank input.
inline Matrix orthonormalize_columns(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (n > m) throw Error(ErrorCode::ShapeMismatch, "orthonormalize_columns: more columns than rows");
    Matrix r = a;
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(n);
    std::vector<double> diag_sign(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> v(m - k);
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            v[i - k] = r(i, k);
            norm += v[i - k] * v[i - k];
        }
        norm = std::sqrt(norm);
        const double alpha = v[0] >= 0.0 ? -norm : norm;
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double x : v) vnorm += x * x;
        if (vnorm > 0.0) {
            vnorm = std::sqrt(vnorm);
            for (double& x : v) x /= vnorm;
            for (std::size_t j = k; j < n; ++j) {
                double d = 0.0;
                for (std::size_t i = k; i < m; ++i) d += v[i - k] * r(i, j);
                for (std::size_t i = k; i < m; ++i) r(i, j) -= 2.0 * d * v[i - k];
            }
        }
        diag_sign[k] = r(k, k) < 0.0 ? -1.0 : 1.0;
        reflectors.push_back(std::move(v));
    }
    Matrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
    for (std::size_t kk = n; kk-- > 0;) {
        const auto& v = reflectors[kk];
        for (std::size_t j = 0; j < n; ++j) {
            double d = 0.0;
            for (std::size_t i = kk; i < m; ++i) d += v[i - kk] * q(i, j);
            if (d == 0.0) continue;
            for (std::size_t i = kk; i < m; ++i) q(i, j) -= 2.0 * d * v[i - kk];
        }
    }
    for (std::size_t j = 0; j < n; ++j)
        if (diag_sign[j] < 0.0)
            for (std::size_t i = 0; i < m; ++i) q(i, j) = -q(i, j);
    return q;
}

/// In-place Cholesky factor of a symmetric positive definite matrix (lower
/// triangle). Returns false if a pivot falls below `pivot_floor`.
inline bool cholesky_lower(Matrix& g, double pivot_floor) {
    const std::size_t n = g.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = g(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= g(j, k) * g(j, k);
        if (!(d > pivot_floor)) return false;
        const double l = std::sqrt(d);
        g(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = g(i, j);
            auto gi = g.row(i);
            auto gj = g.row(j);
            for (std::size_t k = 0; k < j; ++k) s -= gi[k] * gj[k];
            g(i, j) = s / l;
        }
        for (std::size_t i = 0; i < j; ++i) g(i, j) = 0.0;
    }
    return true;
}

/// Solve L Lᵀ x = b given the lower Cholesky factor.
inline std::vector<double> cholesky_solve(const Matrix& l, std::vector<double> b) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        auto li = l.row(i);
        for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
        b[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
        b[i] = s / l(i, i);
    }
    return b;
}

} // namespace mcomplete
