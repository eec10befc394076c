#pragma once

#include <stdexcept>
#include <string>

namespace msurr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, bounds violations, inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A well-formed request the model cannot satisfy (e.g. an unattainable EIR target).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or version-mismatched files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace msurr
