#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mcomplete {

enum class ErrorCode {
    NonFinite,
    ShapeMismatch,
    OutOfRange,
    NoConvergence,
    NotOrthonormal,
    SingularOperator,
    AsymmetricData,
    RankDeficientMeasurements,
    ConfigInvalid,
    Parse,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::SingularOperator: return "SingularOperator";
    case ErrorCode::AsymmetricData: return "AsymmetricData";
    case ErrorCode::RankDeficientMeasurements: return "RankDeficientMeasurements";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

/// Structured error thrown by every library operation.
///
/// Iterative routines that give up (NoConvergence) or detect a degenerate
/// operator (SingularOperator) attach their best scalar estimate so callers
/// can still report it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, std::optional<double> estimate = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code),
          estimate_(estimate) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<double> estimate() const noexcept { return estimate_; }

private:
    ErrorCode code_;
    std::optional<double> estimate_;
};

} // namespace mcomplete
