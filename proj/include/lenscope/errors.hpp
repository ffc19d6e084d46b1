// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lenscope {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violated precondition: argument outside the documented domain, singular
/// field location, grid too coarse, wrong profile variant, and the like.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// A numeric procedure failed to reach its target: series did not converge,
/// quadrature exhausted its subdivision budget, ODE step size underflowed,
/// root bracket carried no sign change, image-plane conditions not met.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Malformed or inconsistent run configuration. Carries the JSON path of the
/// offending field so the CLI can report it.
class ConfigError : public Error {
public:
  ConfigError(const std::string& field_path, const std::string& msg)
      : Error(field_path + ": " + msg), field_path_(field_path) {}
  const std::string& field_path() const { return field_path_; }

private:
  std::string field_path_;
};

/// Filesystem failure: unreadable input, unwritable output directory.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace lenscope
