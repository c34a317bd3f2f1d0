#pragma once

#include <stdexcept>
#include <string>

namespace sles {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorCode {
    invalid_argument,
    domain,
    inconsistent_history,
    precondition,
    degenerate,
    factorization,
    blow_up,
    provenance,
    alignment,
    config,
    missing_artifact,
    io,
};

[[nodiscard]] constexpr const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::domain: return "domain";
        case ErrorCode::inconsistent_history: return "inconsistent-history";
        case ErrorCode::precondition: return "precondition";
        case ErrorCode::degenerate: return "degenerate";
        case ErrorCode::factorization: return "factorization";
        case ErrorCode::blow_up: return "blow-up";
        case ErrorCode::provenance: return "provenance";
        case ErrorCode::alignment: return "alignment";
        case ErrorCode::config: return "config";
        case ErrorCode::missing_artifact: return "missing-artifact";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace sles
