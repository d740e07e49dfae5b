#pragma once

#include <stdexcept>
#include <string>

namespace mixbddc {

enum class ErrorKind {
  InvalidArgument,
  CompatibilityViolation,
  FormatError,
  NumericalFailure,
  ConstraintRank,
  Configuration,
  InternalConsistency,
  Indefinite,
  SizeLimit,
};

const char* to_string(ErrorKind kind);

/// Base of every error raised by the library; the kind says which contract failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Factorization or eigensolver breakdown, tagged with the subdomain (or pair) involved.
class NumericalFailure : public Error {
 public:
  NumericalFailure(int subdomain, const std::string& what);
  int subdomain() const noexcept { return subdomain_; }

 private:
  int subdomain_;
};

}  // namespace mixbddc
