#pragma once

#include <stdexcept>
#include <string>

namespace mediatopic {

// Base of every error thrown by the library. The CLI maps UsageError to exit
// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable file.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (carries file and line in the message).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input parsed but violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad magic, version, or truncated binary payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Vector or matrix shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Bad command line or pipeline configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mediatopic
