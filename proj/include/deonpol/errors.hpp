#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deonpol {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: syntax, schema or model-consistency problems. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// Well-formed input for which the requested computation has no answer. The CLI maps these to exit code 1.
class DomainError : public Error {
public:
    using Error::Error;
};

class ModelError : public InputError {
public:
    using InputError::InputError;
};

class FormulaError : public InputError {
public:
    using InputError::InputError;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : InputError(msg + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class InvalidPolicy : public DomainError {
public:
    using DomainError::DomainError;
};

/// No policy satisfies the constraint at the initial state.
class InfeasibleConstraint : public DomainError {
public:
    using DomainError::DomainError;
};

/// A nested probabilistic subformula whose truth depends on the policy.
class AmbiguousFormula : public DomainError {
public:
    using DomainError::DomainError;
};

class CapExceeded : public DomainError {
public:
    using DomainError::DomainError;
};

class ConstraintMaintenanceFailure : public DomainError {
public:
    using DomainError::DomainError;
};

class NoBracket : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace deonpol
