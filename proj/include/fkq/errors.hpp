#pragma once

#include <stdexcept>
#include <string>

namespace fkq {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad t, K, grid, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A hypothesis on the model (H0-H4) does not hold on the grid.
class AssumptionError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-convergence, overflow, NaN, inconsistent basis.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Two eigenvalues closer than the resolution threshold.
class NearDegenerateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A truncated kernel sum is negative beyond what the tail allows.
class ConsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Monte Carlo run without usable samples (all extinct, ESS too small).
class SampleError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or model file.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace fkq
