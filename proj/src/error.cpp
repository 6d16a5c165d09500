#include "pgsim/error.hpp"

namespace pgsim {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParameterDomain: return "parameter-domain";
        case ErrorCode::Domain: return "domain";
        case ErrorCode::InfiniteMoment: return "infinite-moment";
        case ErrorCode::Support: return "support";
        case ErrorCode::Fit: return "fit";
        case ErrorCode::Integration: return "integration";
        case ErrorCode::NotPositiveDefinite: return "not-positive-definite";
        case ErrorCode::Infeasible: return "infeasible-correlation";
        case ErrorCode::UndefinedCorrelation: return "undefined-correlation";
        case ErrorCode::Input: return "input";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::NotFound: return "not-found";
    }
    return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace pgsim
