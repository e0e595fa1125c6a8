#pragma once

#include <gtest/gtest.h>

#include "mcomplete/mcomplete.hpp"

namespace testing_support {

using namespace mcomplete;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return gaussian_matrix(rows, cols, rng);
}

/// Runs fn and returns the code of the mcomplete::Error it throws.
template <class Fn>
std::optional<ErrorCode> error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

/// Unit vector in R^n orthogonal to the columns of frame.
inline std::vector<double> orthogonal_unit(const Matrix& frame, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> x(frame.rows());
    for (double& v : x) v = rng.normal();
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < frame.cols(); ++k) {
            double c = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) c += frame(i, k) * x[i];
            for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * frame(i, k);
        }
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double& v : x) v /= nrm;
    return x;
}

} // namespace testing_support
