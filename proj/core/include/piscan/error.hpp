#pragma once

#include <stdexcept>
#include <string>

namespace piscan {

// Base for every error the library raises. Callers that only care about
// "operation failed" catch this; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (empty truth string, empty
// label list, k smaller than the number of strata, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class SpanError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or config.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace piscan
