#ifndef WAAM_ERROR_HPP
#define WAAM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace waam {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation
/// (non-positive speed or height, lambda outside [0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Vector lengths that do not agree, or empty where a value is required.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or type invariant violation.
class ValidationError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public Error {
public:
    using Error::Error;
};

class NonInvertibleError : public Error {
public:
    using Error::Error;
};

/// The part cannot be sliced inside the process envelope.
class GeometryInfeasibleError : public Error {
public:
    using Error::Error;
};

/// A plan produced speeds or heights outside the process bounds.
class PlanInfeasibleError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class ComparisonError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace waam

#endif // WAAM_ERROR_HPP
