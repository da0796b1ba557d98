#pragma once

#include <stdexcept>
#include <string>

namespace rovella {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a map (x = 0, |x| > 1, |t| > eps_max).
class DomainError : public Error {
public:
    using Error::Error;
};

class DeltaTooLarge : public Error {
public:
    using Error::Error;
};

// An orbit point rounded to exactly 0.
class SingularHit : public Error {
public:
    using Error::Error;
};

class CapExceeded : public Error {
public:
    using Error::Error;
};

class EmptyIntersection : public Error {
public:
    using Error::Error;
};

class ParamError : public Error {
public:
    using Error::Error;
};

class NotHyperbolic : public Error {
public:
    using Error::Error;
};

class BranchStraddle : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class InvalidState : public Error {
public:
    using Error::Error;
};

// A tower orbit returned to a part of the base not covered by the partition.
class UncoveredReturn : public Error {
public:
    using Error::Error;
};

// Invalid experiment configuration; maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rovella
