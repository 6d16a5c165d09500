#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pgsim {

/// Classifies every failure the library can raise. The CLI maps these onto exit codes.
enum class ErrorCode {
    ParameterDomain,       // distribution / structure parameters outside their domain
    Domain,                // argument outside the function domain (e.g. u not in [0,1])
    InfiniteMoment,        // mean or variance does not exist
    Support,               // data do not fit the family's support
    Fit,                   // optimizer or fitting failure
    Integration,           // quadrature did not reach the requested tolerance
    NotPositiveDefinite,   // Toeplitz / covariance matrix not PD
    Infeasible,            // correlation target above the attainable maximum
    UndefinedCorrelation,  // correlation of a constant series
    Input,                 // malformed or inconsistent input
    Parse,                 // file could not be parsed
    NotFound,              // input file missing
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace pgsim
