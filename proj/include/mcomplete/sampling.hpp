#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcomplete/error.hpp"
#include "mcomplete/matrix.hpp"
#include "mcomplete/rng.hpp"

namespace mcomplete {

struct Index {
    std::size_t row;
    std::size_t col;
    friend auto operator<=>(const Index&, const Index&) = default;
};

enum class SamplingModel {
    uniform,   // exactly `param` entries, all size-m subsets equally likely
    bernoulli, // each entry independently with probability `param`
    symmetric, // `param` distinct pairs i <= j drawn uniformly, stored with their mirrors
};

/// The observed index set Ω with its sampling metadata.
///
/// Indices are unique and sorted row-major.
struct SampleSet {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Index> indices;
    SamplingModel model = SamplingModel::uniform;
    double param = 0.0;
    std::uint64_t seed = 0;

    std::size_t count() const noexcept { return indices.size(); }

    /// Sampling probability p: the Bernoulli parameter, otherwise |Ω|/(n1 n2).
    double probability() const noexcept {
        if (model == SamplingModel::bernoulli) return param;
        const double total = static_cast<double>(rows) * static_cast<double>(cols);
        return total > 0.0 ? static_cast<double>(indices.size()) / total : 0.0;
    }

    /// Row-major 0/1 mask.
    std::vector<unsigned char> mask() const {
        std::vector<unsigned char> m(rows * cols, 0);
        for (const auto& ix : indices) m[ix.row * cols + ix.col] = 1;
        return m;
    }

    friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

namespace detail {

inline SampleSet from_linear(std::size_t n1, std::size_t n2, std::vector<std::uint64_t> linear,
                             SamplingModel model, double param, std::uint64_t seed) {
    std::sort(linear.begin(), linear.end());
    SampleSet s{n1, n2, {}, model, param, seed};
    s.indices.reserve(linear.size());
    for (auto k : linear) s.indices.push_back({static_cast<std::size_t>(k / n2), static_cast<std::size_t>(k % n2)});
    return s;
}

/// First m positions of a seeded Fisher-Yates shuffle of [0, total).
inline std::vector<std::uint64_t> partial_shuffle(std::uint64_t total, std::uint64_t m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::uint64_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::uint64_t{0});
    for (std::uint64_t k = 0; k < m; ++k) {
        const std::uint64_t j = k + rng.below(total - k);
        std::swap(pool[k], pool[j]);
    }
    pool.resize(m);
    return pool;
}

} // namespace detail

/// m distinct entries chosen uniformly among all size-m subsets.
inline SampleSet sample_uniform(std::size_t n1, std::size_t n2, std::size_t m, std::uint64_t seed) {
    const std::uint64_t total = static_cast<std::uint64_t>(n1) * n2;
    if (m > total)
        throw Error(ErrorCode::OutOfRange,
                    "sample_uniform: m = " + std::to_string(m) + " exceeds n1*n2 = " + std::to_string(total));
    return detail::from_linear(n1, n2, detail::partial_shuffle(total, m, seed), SamplingModel::uniform,
                               static_cast<double>(m), seed);
}

/// Each entry kept independently with probability p.
inline SampleSet sample_bernoulli(std::size_t n1, std::size_t n2, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::OutOfRange, "sample_bernoulli: p must lie in [0, 1]");
    SplitMix64 rng(seed);
    SampleSet s{n1, n2, {}, SamplingModel::bernoulli, p, seed};
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            if (rng.uniform() < p) s.indices.push_back({i, j});
    return s;
}

/// m distinct unordered pairs {i, j} (i <= j) out of n(n+1)/2, each stored
/// together with its mirror so that Ω is symmetric.
inline SampleSet sample_symmetric(std::size_t n, std::size_t m, std::uint64_t seed) {
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n + 1) / 2;
    if (m > total)
        throw Error(ErrorCode::OutOfRange,
                    "sample_symmetric: m = " + std::to_string(m) + " exceeds n(n+1)/2 = " + std::to_string(total));
    // Enumerate the upper triangle row by row: (0,0),(0,1)...(0,n-1),(1,1),...
    std::vector<std::uint64_t> upper_pos;
    upper_pos.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) upper_pos.push_back(static_cast<std::uint64_t>(i) * n + j);
    std::vector<std::uint64_t> linear;
    linear.reserve(2 * m);
    for (auto k : detail::partial_shuffle(total, m, seed)) {
        const auto pos = upper_pos[k];
        const auto i = pos / n;
        const auto j = pos % n;
        linear.push_back(pos);
        if (i != j) linear.push_back(j * n + i);
    }
    return detail::from_linear(n, n, std::move(linear), SamplingModel::symmetric, static_cast<double>(m), seed);
}

/// Build a SampleSet from explicit indices, validating ranges and duplicates.
inline SampleSet make_sample_set(std::size_t n1, std::size_t n2, std::vector<Index> indices) {
    for (const auto& ix : indices)
        if (ix.row >= n1 || ix.col >= n2)
            throw Error(ErrorCode::OutOfRange, "index (" + std::to_string(ix.row) + "," + std::to_string(ix.col) +
                                                   ") outside " + std::to_string(n1) + "x" + std::to_string(n2));
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw Error(ErrorCode::OutOfRange, "duplicate index in sample set");
    const double m = static_cast<double>(indices.size());
    return SampleSet{n1, n2, std::move(indices), SamplingModel::uniform, m, 0};
}

inline void require_shape(const Matrix& a, const SampleSet& omega, const char* where) {
    if (a.rows() != omega.rows || a.cols() != omega.cols)
        throw Error(ErrorCode::ShapeMismatch, std::string(where) + ": matrix " + a.shape_string() + " vs sample set " +
                                                  std::to_string(omega.rows) + "x" + std::to_string(omega.cols));
}

/// P_Ω: keep the entries on Ω, zero elsewhere.
inline Matrix project_omega(const Matrix& a, const SampleSet& omega) {
    require_shape(a, omega, "project_omega");
    Matrix out(a.rows(), a.cols());
    for (const auto& ix : omega.indices) out(ix.row, ix.col) = a(ix.row, ix.col);
    return out;
}

/// Values of a on Ω, in index order.
inline std::vector<double> gather(const Matrix& a, const SampleSet& omega) {
    require_shape(a, omega, "gather");
    std::vector<double> v;
    v.reserve(omega.count());
    for (const auto& ix : omega.indices) v.push_back(a(ix.row, ix.col));
    return v;
}

/// Matrix equal to `values` on Ω and zero elsewhere.
inline Matrix scatter(const SampleSet& omega, std::span<const double> values) {
    if (values.size() != omega.count())
        throw Error(ErrorCode::ShapeMismatch, "scatter: value count does not match |Ω|");
    Matrix out(omega.rows, omega.cols);
    for (std::size_t k = 0; k < values.size(); ++k) out(omega.indices[k].row, omega.indices[k].col) = values[k];
    return out;
}

/// Coverage and connectivity of the bipartite row/column graph of Ω.
struct FeasibilityReport {
    struct Component {
        std::vector<std::size_t> rows;
        std::vector<std::size_t> cols;
    };
    std::vector<bool> rows_covered;
    std::vector<bool> cols_covered;
    std::size_t component_count = 0;
    std::vector<Component> components; // covered vertices only; isolated vertices are not components
    bool rank1_recoverable = false;
};

/// Rows and columns are vertices, each (i, j) in Ω an edge. A rank-1 matrix
/// can only be pinned down when every vertex is covered and the graph is
/// connected.
inline FeasibilityReport feasibility_check(const SampleSet& omega) {
    const std::size_t n1 = omega.rows;
    const std::size_t n2 = omega.cols;
    FeasibilityReport rep;
    rep.rows_covered.assign(n1, false);
    rep.cols_covered.assign(n2, false);

    // Adjacency lists; column vertex j is numbered n1 + j.
    std::vector<std::vector<std::size_t>> adj(n1 + n2);
    for (const auto& ix : omega.indices) {
        adj[ix.row].push_back(n1 + ix.col);
        adj[n1 + ix.col].push_back(ix.row);
        rep.rows_covered[ix.row] = true;
        rep.cols_covered[ix.col] = true;
    }
    std::vector<bool> seen(n1 + n2, false);
    std::vector<std::size_t> queue;
    for (std::size_t start = 0; start < n1 + n2; ++start) {
        if (seen[start] || adj[start].empty()) continue;
        FeasibilityReport::Component comp;
        queue.assign(1, start);
        seen[start] = true;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t v = queue[head];
            if (v < n1)
                comp.rows.push_back(v);
            else
                comp.cols.push_back(v - n1);
            for (std::size_t w : adj[v])
                if (!seen[w]) {
                    seen[w] = true;
                    queue.push_back(w);
                }
        }
        std::sort(comp.rows.begin(), comp.rows.end());
        std::sort(comp.cols.begin(), comp.cols.end());
        rep.components.push_back(std::move(comp));
    }
    rep.component_count = rep.components.size();
    const bool all_rows = std::all_of(rep.rows_covered.begin(), rep.rows_covered.end(), [](bool b) { return b; });
    const bool all_cols = std::all_of(rep.cols_covered.begin(), rep.cols_covered.end(), [](bool b) { return b; });
    rep.rank1_recoverable = all_rows && all_cols && rep.component_count == 1;
    return rep;
}

// Observed-entry file: "%%observed n1 n2 nnz", then nnz lines "i j value"
// with 1-based indices.

struct ObservedEntries {
    SampleSet omega;
    std::vector<double> values; // aligned with omega.indices
};

inline void write_observed(std::ostream& os, const SampleSet& omega, std::span<const double> values) {
    if (values.size() != omega.count())
        throw Error(ErrorCode::ShapeMismatch, "write_observed: value count does not match |Ω|");
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    os << "%%observed " << omega.rows << ' ' << omega.cols << ' ' << omega.count() << '\n';
    for (std::size_t k = 0; k < values.size(); ++k)
        os << omega.indices[k].row + 1 << ' ' << omega.indices[k].col + 1 << ' ' << values[k] << '\n';
    os.precision(old_precision);
}

inline ObservedEntries read_observed(std::istream& is) {
    std::string line;
    if (!detail::next_content_line(is, line)) throw Error(ErrorCode::Parse, "observed: empty input");
    std::istringstream header(line);
    std::string tag;
    long long n1 = -1;
    long long n2 = -1;
    long long nnz = -1;
    if (!(header >> tag >> n1 >> n2 >> nnz) || tag != "%%observed" || n1 < 0 || n2 < 0 || nnz < 0)
        throw Error(ErrorCode::Parse, "observed: bad header '" + line + "'");
    std::vector<std::pair<Index, double>> entries;
    entries.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
        if (!detail::next_content_line(is, line))
            throw Error(ErrorCode::Parse, "observed: expected " + std::to_string(nnz) + " entries");
        std::istringstream row(line);
        long long i = 0;
        long long j = 0;
        double v = 0.0;
        if (!(row >> i >> j >> v)) throw Error(ErrorCode::Parse, "observed: bad entry '" + line + "'");
        if (i < 1 || j < 1 || i > n1 || j > n2)
            throw Error(ErrorCode::OutOfRange, "observed: index out of range in '" + line + "'");
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "observed: non-finite value");
        entries.push_back({{static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)}, v});
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    ObservedEntries out;
    out.omega = SampleSet{static_cast<std::size_t>(n1), static_cast<std::size_t>(n2), {}, SamplingModel::uniform,
                          static_cast<double>(nnz), 0};
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (k > 0 && entries[k].first == entries[k - 1].first)
            throw Error(ErrorCode::OutOfRange, "observed: duplicate entry (" + std::to_string(entries[k].first.row + 1) +
                                                   "," + std::to_string(entries[k].first.col + 1) + ")");
        out.omega.indices.push_back(entries[k].first);
        out.values.push_back(entries[k].second);
    }
    return out;
}

} // namespace mcomplete
