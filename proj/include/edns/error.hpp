#pragma once

#include <stdexcept>
#include <string>

namespace edns {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonHermitianInput : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised when beta*|u|^2 exceeds the overflow guard somewhere on the grid.
/// Carries the offending maximum of beta*|u|^2.
class OverflowGuardError : public Error {
public:
    OverflowGuardError(double max_exponent, double guard)
        : Error("damping overflow guard tripped: max beta*|u|^2 = " + std::to_string(max_exponent) +
                " exceeds " + std::to_string(guard)),
          max_exponent_(max_exponent) {}
    [[nodiscard]] double max_exponent() const noexcept { return max_exponent_; }

private:
    double max_exponent_;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// The Gronwall hypothesis does not hold for the supplied samples; the input
/// lies outside the lemma's scope.
class HypothesisViolated : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace edns
