#include "zakai/error.hpp"

namespace zakai {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::DomainMisaligned: return "DomainMisaligned";
        case ErrorKind::SolverFailure: return "SolverFailure";
        case ErrorKind::InvalidLevel: return "InvalidLevel";
        case ErrorKind::InvalidAccuracy: return "InvalidAccuracy";
        case ErrorKind::MissingPilot: return "MissingPilot";
        case ErrorKind::StabilityViolation: return "StabilityViolation";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace zakai
