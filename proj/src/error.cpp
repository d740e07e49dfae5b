#include "mixbddc/error.hpp"

namespace mixbddc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::CompatibilityViolation: return "compatibility-violation";
    case ErrorKind::FormatError: return "format-error";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::ConstraintRank: return "constraint-rank-error";
    case ErrorKind::Configuration: return "configuration-error";
    case ErrorKind::InternalConsistency: return "internal-consistency-error";
    case ErrorKind::Indefinite: return "indefiniteness-error";
    case ErrorKind::SizeLimit: return "size-limit";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

NumericalFailure::NumericalFailure(int subdomain, const std::string& what)
    : Error(ErrorKind::NumericalFailure, "subdomain " + std::to_string(subdomain) + ": " + what),
      subdomain_(subdomain) {}

}  // namespace mixbddc
