#pragma once

#include <stdexcept>
#include <string>

namespace spe {

/// Raised for invalid component specifications and malformed inputs.
class input_error : public std::invalid_argument {
 public:
  explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a computation cannot proceed (total extinction, reducible chain, ...).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spe
