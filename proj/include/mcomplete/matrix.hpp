#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mcomplete/error.hpp"

namespace mcomplete {

/// Dense real matrix, row-major.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_)
            throw Error(ErrorCode::ShapeMismatch, "entry count does not match rows*cols");
    }
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_)
                throw Error(ErrorCode::ShapeMismatch, "ragged initializer list");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }
    void set_column(std::size_t j, std::span<const double> c) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o, "operator+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o, "operator-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(double s) noexcept {
        for (double& x : data_) x *= s;
        return *this;
    }

    /// this += s * o
    Matrix& axpy(double s, const Matrix& o) {
        require_same_shape(o, "axpy");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
        return *this;
    }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    void require_same_shape(const Matrix& o, const char* where) const {
        if (!same_shape(o))
            throw Error(ErrorCode::ShapeMismatch,
                        std::string(where) + ": " + shape_string() + " vs " + o.shape_string());
    }

    std::string shape_string() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }

/// a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw Error(ErrorCode::ShapeMismatch, "matmul: " + a.shape_string() + " * " + b.shape_string());
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

/// aᵀ * b
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw Error(ErrorCode::ShapeMismatch, "matmul_tn: " + a.shape_string() + "ᵀ * " + b.shape_string());
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto ak = a.row(k);
        auto bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            auto ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

/// a * bᵀ
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw Error(ErrorCode::ShapeMismatch, "matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "ᵀ");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

/// Frobenius inner product ⟨a, b⟩ = Σ a_ij b_ij.
inline double inner(const Matrix& a, const Matrix& b) {
    a.require_same_shape(b, "inner");
    double s = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
    return s;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.values()) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.values()) m = std::max(m, std::abs(x));
    return m;
}

inline double trace(const Matrix& a) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
    return t;
}

/// Outer product u vᵀ.
inline Matrix outer(std::span<const double> u, std::span<const double> v) {
    Matrix m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
    return m;
}

/// ‖aᵀa − I‖_max for the columns of a.
inline double orthonormality_defect(const Matrix& a) {
    Matrix g = matmul_tn(a, a);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
            worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

inline void require_finite(const Matrix& a, const char* where) {
    if (!a.all_finite()) throw Error(ErrorCode::NonFinite, std::string(where) + ": matrix has NaN/Inf entries");
}

// Dense text format: "n1 n2" then n1 lines of n2 reals at 17 significant digits.

inline void write_matrix(std::ostream& os, const Matrix& a) {
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    os << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) os << ' ';
            os << a(i, j);
        }
        os << '\n';
    }
    os.precision(old_precision);
}

namespace detail {
inline bool next_content_line(std::istream& is, std::string& line) {
    while (std::getline(is, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string::npos) return true;
    }
    return false;
}
} // namespace detail

inline Matrix read_matrix(std::istream& is) {
    std::string line;
    if (!detail::next_content_line(is, line)) throw Error(ErrorCode::Parse, "matrix: missing header");
    std::istringstream header(line);
    long long n1 = -1;
    long long n2 = -1;
    if (!(header >> n1 >> n2) || n1 < 0 || n2 < 0)
        throw Error(ErrorCode::Parse, "matrix: bad header '" + line + "'");
    Matrix a(static_cast<std::size_t>(n1), static_cast<std::size_t>(n2));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (!detail::next_content_line(is, line))
            throw Error(ErrorCode::Parse, "matrix: expected " + std::to_string(n1) + " rows");
        std::istringstream row(line);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (!(row >> a(i, j)))
                throw Error(ErrorCode::Parse, "matrix: row " + std::to_string(i) + " is short");
        }
        std::string extra;
        if (row >> extra) throw Error(ErrorCode::Parse, "matrix: row " + std::to_string(i) + " is long");
    }
    require_finite(a, "read_matrix");
    return a;
}

} // namespace mcomplete
