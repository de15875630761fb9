#pragma once

#include <stdexcept>
#include <string>

namespace grouprand {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (length mismatches, unknown codes, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A requested (stratum, exposure) cell has no units.
class EmptyCell : public Error {
 public:
  using Error::Error;
};

/// A test statistic cannot be formed from the data at hand.
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace detail
}  // namespace grouprand
