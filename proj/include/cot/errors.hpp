#pragma once

#include <stdexcept>

namespace cot {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape disagreement between tensors (messages name both shapes).
struct DimensionError : Error {
  using Error::Error;
};

/// Invalid argument values: out-of-range labels, bad hyperparameters,
/// stale traces, non-finite inputs.
struct InputError : Error {
  using Error::Error;
};

/// Malformed file contents (IDX magic numbers, checkpoint headers).
struct FormatError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Configuration file problems; messages carry "path:line:".
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace cot
