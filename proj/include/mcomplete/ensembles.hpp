#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "mcomplete/error.hpp"
#include "mcomplete/linalg.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/rng.hpp"

namespace mcomplete {

/// Rank-r factorization M = U diag(sigma) Vᵀ with orthonormal U, V.
struct LowRankFactors {
    Matrix U;
    std::vector<double> sigma;
    Matrix V;

    std::size_t rank() const noexcept { return sigma.size(); }
    std::size_t rows() const noexcept { return U.rows(); }
    std::size_t cols() const noexcept { return V.rows(); }

    /// U diag(sigma) Vᵀ. Exactly symmetric when U and V are identical.
    Matrix materialize() const {
        const std::size_t n1 = U.rows();
        const std::size_t n2 = V.rows();
        const bool symmetric = U == V;
        Matrix m(n1, n2);
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = symmetric ? i : 0; j < n2; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < sigma.size(); ++k) s += sigma[k] * U(i, k) * V(j, k);
                m(i, j) = s;
                if (symmetric) m(j, i) = s;
            }
        }
        return m;
    }

    /// E = Σ_k u_k v_kᵀ, the sign pattern of M on its tangent space.
    Matrix sign_matrix() const { return matmul_nt(U, V); }
};

inline void require_orthonormal(const Matrix& frame, double tol, const char* where) {
    if (orthonormality_defect(frame) > tol)
        throw Error(ErrorCode::NotOrthonormal, std::string(where) + ": columns are not orthonormal");
}

/// Checks the LowRankFactors invariants; throws on violation.
inline void validate(const LowRankFactors& f, double tol = 1e-10) {
    if (f.U.cols() != f.rank() || f.V.cols() != f.rank())
        throw Error(ErrorCode::ShapeMismatch, "factors: U, sigma, V disagree on rank");
    require_orthonormal(f.U, tol, "factors U");
    require_orthonormal(f.V, tol, "factors V");
    if (f.rank() == 0) return;
    const double top = *std::max_element(f.sigma.begin(), f.sigma.end());
    for (double s : f.sigma)
        if (!(s > 1e-12 * top)) throw Error(ErrorCode::OutOfRange, "factors: singular values must be positive");
}

/// n x r matrix of i.i.d. standard normals.
inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng) {
    Matrix g(rows, cols);
    for (double& x : g.values()) x = rng.normal();
    return g;
}

/// Haar-distributed r-frame in R^n: Q factor of a Gaussian matrix with the
/// diagonal of R made positive.
inline Matrix haar_frame(std::size_t n, std::size_t r, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return orthonormalize_columns(gaussian_matrix(n, r, rng));
}

/// Random orthogonal model: independent Haar frames for U and V. An empty
/// sigma means all ones.
inline LowRankFactors random_orthogonal_model(std::size_t n1, std::size_t n2, std::size_t r,
                                              std::vector<double> sigma, std::uint64_t seed) {
    if (r == 0 || r > std::min(n1, n2))
        throw Error(ErrorCode::OutOfRange, "random_orthogonal_model: need 1 <= r <= min(n1, n2)");
    if (sigma.empty()) sigma.assign(r, 1.0);
    if (sigma.size() != r) throw Error(ErrorCode::OutOfRange, "random_orthogonal_model: sigma must have length r");
    for (double s : sigma)
        if (!(s > 0.0)) throw Error(ErrorCode::OutOfRange, "random_orthogonal_model: sigma must be positive");
    return {haar_frame(n1, r, hash_combine(seed, 1)), std::move(sigma), haar_frame(n2, r, hash_combine(seed, 2))};
}

/// Columns first, first+1, ..., first+r-1 of the orthonormal DCT-II basis of
/// R^n. Every entry is bounded by √(2/n), so the frame has μ_B <= 2.
inline Matrix dct_frame(std::size_t n, std::size_t r, std::size_t first = 0) {
    if (first + r > n) throw Error(ErrorCode::OutOfRange, "dct_frame: columns exceed n");
    Matrix f(n, r);
    const double nd = static_cast<double>(n);
    for (std::size_t k = 0; k < r; ++k) {
        const std::size_t freq = first + k;
        const double w = freq == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
        for (std::size_t i = 0; i < n; ++i)
            f(i, k) = w * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) * static_cast<double>(freq) / nd);
    }
    return f;
}

/// Incoherent basis model: M = Σ ε_k σ_k u_k v_kᵀ with i.i.d. random signs.
/// The signs are folded into U so the returned sigma stays positive.
inline LowRankFactors incoherent_basis_model(Matrix U, Matrix V, std::vector<double> sigma, std::uint64_t seed) {
    require_orthonormal(U, 1e-8, "incoherent_basis_model U");
    require_orthonormal(V, 1e-8, "incoherent_basis_model V");
    if (U.cols() != V.cols() || sigma.size() != U.cols())
        throw Error(ErrorCode::ShapeMismatch, "incoherent_basis_model: U, V, sigma disagree on rank");
    for (double s : sigma)
        if (!(s > 0.0)) throw Error(ErrorCode::OutOfRange, "incoherent_basis_model: sigma must be positive");
    SplitMix64 rng(seed);
    for (std::size_t k = 0; k < U.cols(); ++k) {
        if (rng.sign() < 0.0)
            for (std::size_t i = 0; i < U.rows(); ++i) U(i, k) = -U(i, k);
    }
    return {std::move(U), std::move(sigma), std::move(V)};
}

/// M = M_L M_Rᵀ with i.i.d. Gaussian n x r factors, returned as its thin SVD.
inline LowRankFactors gaussian_factor_model(std::size_t n, std::size_t r, std::uint64_t seed) {
    if (r == 0 || r > n) throw Error(ErrorCode::OutOfRange, "gaussian_factor_model: need 1 <= r <= n");
    SplitMix64 rng(seed);
    const Matrix left = gaussian_matrix(n, r, rng);
    const Matrix right = gaussian_matrix(n, r, rng);
    // M = Q_L (R_L R_Rᵀ) Q_Rᵀ; only the r x r core needs an SVD.
    const Matrix ql = orthonormalize_columns(left);
    const Matrix qr = orthonormalize_columns(right);
    const Matrix rl = matmul_tn(ql, left);
    const Matrix rr = matmul_tn(qr, right);
    const SvdResult core = svd(matmul_nt(rl, rr));
    return {matmul(ql, core.U), core.sigma, matmul(qr, core.V)};
}

/// M = M_F M_Fᵀ with an i.i.d. Gaussian n x r factor; U == V.
inline LowRankFactors psd_factor_model(std::size_t n, std::size_t r, std::uint64_t seed) {
    if (r == 0 || r > n) throw Error(ErrorCode::OutOfRange, "psd_factor_model: need 1 <= r <= n");
    SplitMix64 rng(seed);
    const Matrix factor = gaussian_matrix(n, r, rng);
    const Matrix q = orthonormalize_columns(factor);
    const Matrix rf = matmul_tn(q, factor);
    const EigResult core = symmetric_eigen(matmul_nt(rf, rf));
    Matrix u = matmul(q, core.Q);
    return {u, core.values, u};
}

// Factors file: "#U", dense U, "#sigma", dense 1 x r, "#V", dense V.

inline void write_factors(std::ostream& os, const LowRankFactors& f) {
    os << "#U\n";
    write_matrix(os, f.U);
    os << "#sigma\n";
    write_matrix(os, Matrix(1, f.sigma.size(), f.sigma));
    os << "#V\n";
    write_matrix(os, f.V);
}

inline LowRankFactors read_factors(std::istream& is) {
    auto expect = [&](const char* tag) {
        std::string line;
        if (!detail::next_content_line(is, line) || line.substr(0, line.find_last_not_of(" \t\r") + 1) != tag)
            throw Error(ErrorCode::Parse, std::string("factors: expected section ") + tag);
    };
    LowRankFactors f;
    expect("#U");
    f.U = read_matrix(is);
    expect("#sigma");
    const Matrix s = read_matrix(is);
    f.sigma.assign(s.values().begin(), s.values().end());
    expect("#V");
    f.V = read_matrix(is);
    validate(f, 1e-8);
    return f;
}

} // namespace mcomplete
