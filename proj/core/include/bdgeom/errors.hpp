#pragma once

#include <stdexcept>
#include <string>

namespace bdgeom {

// A caller broke an operation's precondition (bad dimension, radius larger
// than the index cell, unknown point id, ...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Invalid user-facing configuration (density table, functional selector, ...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Affinely dependent or coincident input to an exact geometric construction.
class DegenerateGeometry : public std::runtime_error {
 public:
  explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};

// A functional whose covariance weights are all zero (never fires).
class InfeasibleFunctional : public std::runtime_error {
 public:
  explicit InfeasibleFunctional(const std::string& what) : std::runtime_error(what) {}
};

// Certified tail of a truncated rate expansion exceeds the requested tolerance.
class TruncationError : public std::runtime_error {
 public:
  explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void require(bool cond, const char* what) {
  if (!cond) throw ContractViolation(what);
}
}  // namespace detail

}  // namespace bdgeom
