#pragma once

#include <stdexcept>
#include <string>

namespace hlab {

/// Base of every failure the library reports on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: violated precondition, malformed config, missing file.
class DomainError : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class Diverged : public Error {
public:
    using Error::Error;
};

/// Solution found but its tails do not decay (negative far field).
class Inadmissible : public Error {
public:
    using Error::Error;
};

class StepCollapse : public Error {
public:
    using Error::Error;
};

class NotIsolated : public Error {
public:
    using Error::Error;
};

class AmbiguousConvergence : public Error {
public:
    using Error::Error;
};

class NoBracket : public DomainError {
public:
    using DomainError::DomainError;
};

class UndeterminedDominant : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public DomainError {
public:
    using DomainError::DomainError;
};

class NotHeteroclinic : public DomainError {
public:
    using DomainError::DomainError;
};

class WindowEmpty : public Error {
public:
    using Error::Error;
};

class ModeOverflow : public Error {
public:
    using Error::Error;
};

}  // namespace hlab
