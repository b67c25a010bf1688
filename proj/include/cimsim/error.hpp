#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cimsim {

/// Error classes surfaced by the library. The CLI maps each to its own exit code.
enum class ErrorCategory {
    config,       // malformed or inconsistent configuration
    validation,   // a domain invariant was violated by the caller
    mapping,      // weights do not fit the crossbar geometry
    encoding,     // input not representable under the chosen encoding
    calibration,  // calibration/profiling could not produce a result
    model,        // model manifest or weight blob is invalid
    io,           // file system failures
    internal      // should not happen; indicates a bug
};

inline std::string_view to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::mapping: return "mapping";
        case ErrorCategory::encoding: return "encoding";
        case ErrorCategory::calibration: return "calibration";
        case ErrorCategory::model: return "model";
        case ErrorCategory::io: return "io";
        case ErrorCategory::internal: return "internal";
    }
    return "unknown";
}

/// Process exit code for an error category (0 is success, 1 is reserved for
/// unexpected exceptions, 2 for command line usage errors).
inline int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return 3;
        case ErrorCategory::validation: return 4;
        case ErrorCategory::mapping: return 5;
        case ErrorCategory::encoding: return 6;
        case ErrorCategory::calibration: return 7;
        case ErrorCategory::model: return 8;
        case ErrorCategory::io: return 9;
        case ErrorCategory::internal: return 10;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

    /// Same category, message prefixed with where it happened.
    [[nodiscard]] Error with_context(const std::string& context) const {
        return Error(category_, context + ": " + what());
    }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
    throw Error(category, what);
}

}  // namespace cimsim
