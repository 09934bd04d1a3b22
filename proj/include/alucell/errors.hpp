#pragma once

#include <stdexcept>
#include <string>

namespace alucell {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (files, schemas, argument combinations).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Mathematical precondition violated (zero total bath mass, near-zero
// denominator, nonfinite intermediate).
class DomainError : public Error {
public:
    using Error::Error;
};

// A denominator that the model forbids exactly (e.g. bubble coverage = 1).
class SingularityError : public DomainError {
public:
    using DomainError::DomainError;
};

// Integration produced a nonfinite state.  Carries the step at which the
// abort happened and the first offending state component (or -1).
class SimulationError : public Error {
public:
    SimulationError(const std::string& msg, long step, int component)
        : Error(msg), step(step), component(component) {}
    long step = -1;
    int component = -1;
};

// Training loop hit a nonfinite loss or gradient.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, long epoch, long batch)
        : Error(msg), epoch(epoch), batch(batch) {}
    long epoch = -1;
    long batch = -1;
};

// File format / persistence problems (bad magic, checksum, truncation).
class IoError : public Error {
public:
    using Error::Error;
};

// Caller misuse of an API contract (index out of range etc.).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace alucell
