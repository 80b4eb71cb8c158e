#pragma once

#include <stdexcept>
#include <string>

namespace teayield {

/// Bad input: malformed files, violated preconditions, invalid configuration.
/// The CLI maps this to exit code 1; any other exception is an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace teayield
