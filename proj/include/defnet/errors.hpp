#pragma once

#include <stdexcept>
#include <string>

namespace defnet {

// Malformed arguments: wrong shapes, non-finite values, out-of-range settings.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Arguments outside the mathematical domain of an operation (e.g. alpha <= 1).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace defnet
