// errors.hpp — exception types raised across the toolkit

#pragma once

#include <stdexcept>
#include <string>

namespace ionize {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : Error { using Error::Error; };
struct CutoffError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct IdentificationError : Error { using Error::Error; };
struct ExhaustionError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NonConvergenceError : Error { using Error::Error; };
struct RootFindingError : Error { using Error::Error; };
struct NumericalBlowupError : Error { using Error::Error; };
struct MaxDimensionError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct UnknownPresetError : Error { using Error::Error; };
struct MissingRunError : Error { using Error::Error; };

// Carries the dotted path of the offending configuration field.
struct ValidationError : Error {
    std::string field;
    ValidationError(std::string field_path, const std::string& what)
        : Error(field_path + ": " + what), field(std::move(field_path)) {}
};

}  // namespace ionize
