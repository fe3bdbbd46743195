#pragma once

#include <stdexcept>
#include <string>

namespace ridge {

/// Failure categories. The CLI maps these onto its exit codes:
/// validation/verification failures -> 1, input/format problems -> 2,
/// representability defects -> 3.
enum class ErrorKind {
    Syntax,            // malformed expression text
    UnknownIdentifier, // undeclared variable in an expression
    UnknownFunction,   // call to a function outside the supported set
    EvalDomain,        // log of non-positive, division by zero, ...
    MissingBinding,    // eval called without a value for a variable
    InputFormat,       // bad file, bad flag encoding, truncated data
    InvalidDirections, // zero vector or dependent pair
    Geometry,          // singular map, degenerate scale
    OutOfDomain,       // evaluation outside the function's region
    OutOfRange,        // profile queried outside its t range
    Smoothness,        // derivative order exceeds the smoothness hint
    Representability,  // separation / constancy / increment defect
    Verification,      // reconstruction error above tolerance
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    /// Exit code contract: 0 success, 1 validation/verification failure,
    /// 2 input/format error, 3 representability defect.
    int cli_exit_code() const {
        switch (kind_) {
        case ErrorKind::InvalidDirections:
        case ErrorKind::Geometry:
        case ErrorKind::Smoothness:
        case ErrorKind::Verification:
            return 1;
        case ErrorKind::Representability:
            return 3;
        default:
            return 2;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

} // namespace ridge
