#pragma once

#include <stdexcept>
#include <string>

namespace trl {

// Raised for invalid data, malformed files, and contract violations on inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trl
