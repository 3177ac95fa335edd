#pragma once

#include <stdexcept>
#include <string>

namespace wcl {

// Base class for all toolkit errors. Subclasses map onto CLI exit codes:
// construction failures (bad operators, bad parameters) exit 3, experiment
// failures (divergent solves, blown-up integrands) exit 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConstructionError : Error {
    using Error::Error;
};

struct ExperimentError : Error {
    using Error::Error;
};

struct InvalidOperator : ConstructionError {
    using ConstructionError::ConstructionError;
};

struct NotAProjector : ConstructionError {
    using ConstructionError::ConstructionError;
};

struct CouplingZero : ConstructionError {
    using ConstructionError::ConstructionError;
};

struct InvalidTimescale : ConstructionError {
    using ConstructionError::ConstructionError;
};

struct InvalidGenerator : ConstructionError {
    using ConstructionError::ConstructionError;
};

struct Unsupported : ConstructionError {
    using ConstructionError::ConstructionError;
};

struct VolterraDivergence : ExperimentError {
    using ExperimentError::ExperimentError;
};

struct IntegrandBlowup : ExperimentError {
    using ExperimentError::ExperimentError;
};

} // namespace wcl
