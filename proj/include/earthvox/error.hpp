#pragma once

#include <stdexcept>
#include <string>

namespace earthvox {

// Base class for every error raised by the library. Contract violations
// (bad shapes, out-of-range parameters) and I/O failures both land here.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or truncated file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace earthvox
