#pragma once

#include <stdexcept>
#include <string>

namespace pixcurate {

// Bad input, violated precondition or failed validation. Maps to CLI exit 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system or codec failure. Maps to CLI exit 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote scorer/embedder/judge failure after retries. Maps to CLI exit 2.
class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pixcurate
