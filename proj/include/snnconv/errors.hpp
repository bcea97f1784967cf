#pragma once

#include <stdexcept>
#include <string>

namespace snnconv {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape disagreements between tensor operands.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid argument values (bad ranges, T < 1, lo >= hi, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Problems with external data: IDX files, datasets.
struct DataError : Error {
    using Error::Error;
};

// Malformed, truncated or version-mismatched checkpoints.
struct CheckpointError : DataError {
    using DataError::DataError;
};

// Invalid experiment configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Training diverged or cannot run.
struct TrainError : Error {
    using Error::Error;
};

// ANN -> SNN conversion cannot proceed.
struct ConversionError : Error {
    using Error::Error;
};

// Internal consistency violation during simulation (charge leak).
struct SimulationError : Error {
    using Error::Error;
};

}  // namespace snnconv
