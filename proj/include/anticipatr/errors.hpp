#pragma once

#include <stdexcept>
#include <string>

namespace anticipatr {

// Operand shapes do not conform to an operation's signature.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition stated by an operation's contract was violated.
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file on disk is malformed (bad magic, truncation, non-finite payload).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ingested records are inconsistent (bad manifest rows, out-of-bounds gaze).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A metric's input is degenerate (single-class set, empty fixation map).
struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace anticipatr
