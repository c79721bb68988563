#pragma once

#include <stdexcept>
#include <string>

namespace afftail {

enum class ErrorCode {
    InvalidMeasure,
    InvalidArgument,
    NoPositiveRoot,
    NotContracting,
    Overflow,
    NonFinite,
    NoFixedPoint,
    InsufficientData,
    ZeroDenominator,
    ZeroCcdf,
    MaxStepsExceeded,
    ParametricRefused,
    Parse,
    Io,
};

inline const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidMeasure: return "InvalidMeasure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoPositiveRoot: return "NoPositiveRoot";
    case ErrorCode::NotContracting: return "NotContracting";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoFixedPoint: return "NoFixedPoint";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::ZeroCcdf: return "ZeroCcdf";
    case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::ParametricRefused: return "ParametricRefused";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Library-wide exception. The code identifies the failure class so callers
/// (and tests) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace afftail
