#pragma once

#include <stdexcept>
#include <string>

namespace dhp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, paths, or file contents.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or undefined statistics.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dhp
