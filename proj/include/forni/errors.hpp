// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace forni {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad parameter value,
/// NaN/Inf input, empty mask, ...). Maps to CLI exit code 1.
struct InvalidArgument : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data (unreadable file, count
/// mismatch, missing baseline, invalid phantom spec). Exit code 2.
struct DataError : Error {
  using Error::Error;
};

/// Numerical failure (rank-deficient design, non-SPD matrix where SPD
/// is required). Exit code 3.
struct NumericError : Error {
  using Error::Error;
};

/// Too few measurements to determine the model. Exit code 2.
struct InsufficientData : DataError {
  using DataError::DataError;
};

/// Degenerate gradient scheme: the fit's design matrix lost rank.
struct RankDeficient : NumericError {
  using NumericError::NumericError;
};

}  // namespace forni
