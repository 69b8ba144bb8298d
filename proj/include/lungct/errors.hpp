#pragma once

#include <stdexcept>
#include <string>

namespace lungct {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad sidecar JSON, bad CSV header, bad date, ...).
struct FormatError : Error {
  using Error::Error;
};

// Internally inconsistent data (declared dims vs raw length, conflicting
// outcomes for one patient, ...).
struct IntegrityError : Error {
  using Error::Error;
};

// Values outside their declared domain (label outside semantics set,
// sex outside the enum, age out of range, ...).
struct ValidationError : Error {
  using Error::Error;
};

// Bad arguments to an operation (lo > hi, dims too small, ...).
struct ArgumentError : Error {
  using Error::Error;
};

// An operation that requires non-empty input got an empty one.
struct EmptyInputError : Error {
  using Error::Error;
};

// A quantity with no defined value for the given input (Dice of two empty
// masks, Gini of zero counts, correlation of a constant feature, ...).
struct UndefinedError : Error {
  using Error::Error;
};

// Model fitting could not proceed (degenerate labels, non-finite features).
struct FitError : Error {
  using Error::Error;
};

// An operation was called on an object in the wrong state.
struct StateError : Error {
  using Error::Error;
};

// The baseline segmenter found no plausible lung component.
struct SegmentationFailedError : Error {
  using Error::Error;
};

}  // namespace lungct
