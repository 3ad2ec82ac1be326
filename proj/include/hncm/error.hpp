#pragma once

#include <stdexcept>
#include <string>

namespace hncm {

/// Raised on contract violations and malformed inputs anywhere in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hncm
