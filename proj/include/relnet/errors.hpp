#pragma once

#include <stdexcept>
#include <string>

namespace relnet {

/// Raised when an iterative numerical procedure fails to converge or a
/// quantity degenerates (survival underflow, non-convergent quadrature,
/// stalled marginal fitting). Maps to exit code 3 in the CLI.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed experiment configuration. Maps to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace relnet
