#pragma once

#include <stdexcept>
#include <string>

namespace jamsentry {

/// Base of every error raised by the library. The CLI maps the concrete
/// type onto its exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument value (n == 0, P < 2, unknown jammer kind, ...).
class ParameterError : public Error { using Error::Error; };

/// Malformed file content: truncated fc16, bad magic, version mismatch.
class FormatError : public Error { using Error::Error; };

class EmptyInputError : public Error { using Error::Error; };

/// Input is well-formed but unusable (too few images, single class, zero total).
class DataError : public Error { using Error::Error; };

class ShapeError : public Error { using Error::Error; };

/// Operation called on an object that is not ready for it (e.g. unfitted model).
class StateError : public Error { using Error::Error; };

class IoError : public Error { using Error::Error; };

/// The scenario violates the weak-jamming admissibility rule.
class ScenarioRejected : public Error { using Error::Error; };

}  // namespace jamsentry
