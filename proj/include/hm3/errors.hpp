#pragma once

#include <stdexcept>
#include <string>

namespace hm3 {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad inputs: broken invariants, out-of-range arguments, mismatched shapes.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Structurally corrupt or unreadable files.
class FormatError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// A spawned external tool failed or produced garbage.
class ExternalToolError : public Error {
public:
  using Error::Error;
};

} // namespace hm3
