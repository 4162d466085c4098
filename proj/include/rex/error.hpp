// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rex {

/// Base class for every error the library raises. The CLI maps each
/// subclass onto its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command-line usage or an invalid configuration value.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input could not be parsed (malformed JSON, bad config syntax).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rex
