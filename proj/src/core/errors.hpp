// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace earlyact {

// Base for all library errors. Subclasses map onto C API status codes and
// CLI exit codes (configuration/validation vs runtime numeric/capacity).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape / dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid configuration or invalid combination of settings.
struct ConfigError : Error {
  using Error::Error;
};

// Index (class label, temporal step, sample) out of range.
struct IndexError : Error {
  using Error::Error;
};

// Sequence longer than the model capacity t_max.
struct CapacityError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// Malformed file content; message carries a byte offset where possible.
struct ParseError : Error {
  using Error::Error;
};

// Filesystem-level failure (open/read/write).
struct IoError : Error {
  using Error::Error;
};

}  // namespace earlyact
