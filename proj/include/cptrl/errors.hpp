#pragma once

#include <stdexcept>
#include <string>

namespace cptrl {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (NaN sample,
// probability outside [0,1], dimension mismatch, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A specification object (utility, weight, schedule, MDP, ...) violates
// its own invariants.
class InvalidSpecError : public Error {
public:
    using Error::Error;
};

class InsufficientSamplesError : public Error {
public:
    using Error::Error;
};

// Raised by the quadrature oracle when a CPT integral does not converge.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace cptrl
