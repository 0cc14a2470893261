#pragma once

#include <stdexcept>
#include <string>

namespace asdflow {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value left the domain of a function where the operation is undefined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The subdifferential is empty at the queried point.
class EmptySubdifferentialError : public Error {
 public:
  using Error::Error;
};

/// A symbolic conjugate (or similar closed-form algebra) is not available
/// for the requested node combination.
class UnsupportedCombinationError : public Error {
 public:
  using Error::Error;
};

/// Problem-file parsing or validation failure; message names the field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A transformed domain is not covered by the source grid.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// A requested grid exceeds the memory budget.
class MemoryBudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace asdflow
