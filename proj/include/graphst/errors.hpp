#pragma once

#include <stdexcept>
#include <string>

namespace graphst {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix dimensions do not line up for the requested operation.
struct ShapeError : Error {
  using Error::Error;
};

// A knob or size parameter is outside its legal range.
struct ConfigError : Error {
  using Error::Error;
};

// Input data violates a declared invariant (ids out of range, asymmetry, ...).
struct ValidationError : Error {
  using Error::Error;
};

// A file does not conform to its schema; message names file, line and column.
struct ParseError : Error {
  using Error::Error;
};

// Input is mathematically degenerate for the operation (zero-norm rows, ...).
struct DegenerateInputError : Error {
  using Error::Error;
};

// NaN/Inf showed up, or an iteration diverged.
struct NumericalError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace graphst
