#pragma once

#include <stdexcept>
#include <string>

namespace pcorr {

/// Raised for every violated precondition or malformed input in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcorr
