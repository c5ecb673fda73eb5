#pragma once

#include <stdexcept>
#include <string>

namespace runoff {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed triangle/rectangle shapes (non-square cells, n < 2, ...).
struct StructuralError : Error {
    using Error::Error;
};

// Invalid caller-supplied arguments (empty grids, zero simulation counts, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Non-positive exposure for an accident year.
struct ExposureError : Error {
    using Error::Error;
};

// CSV header is missing a required column.
struct SchemaError : Error {
    using Error::Error;
};

// A cell could not be parsed; message carries the row number.
struct ParseError : Error {
    using Error::Error;
};

// A company is missing rows of its rectangle.
struct CompletenessError : Error {
    using Error::Error;
};

// A selection list references an unknown group code.
struct SelectionError : Error {
    using Error::Error;
};

// Development column with a zero denominator.
struct DegenerateColumnError : Error {
    using Error::Error;
};

// Fitted value that makes a Pearson residual undefined.
struct FitDegeneracyError : Error {
    using Error::Error;
};

// A variance parameter cannot be estimated or extrapolated.
struct EstimationError : Error {
    using Error::Error;
};

// Data outside the support of a likelihood or moment inversion.
struct SupportError : Error {
    using Error::Error;
};

// Denominator of an error measure is zero.
struct NormalizationError : Error {
    using Error::Error;
};

// A risk ratio is undefined for a company (zero mean reserve).
struct RatioUndefinedError : Error {
    using Error::Error;
};

// Network training produced a non-finite loss; message carries the epoch.
struct TrainingDivergenceError : Error {
    using Error::Error;
};

// A level-2 input grid is missing or mis-sized; message names the source.
struct AssemblyError : Error {
    using Error::Error;
};

// Required cells are absent from a full rectangle.
struct IncompleteDataError : Error {
    using Error::Error;
};

}  // namespace runoff
