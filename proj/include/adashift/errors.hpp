#pragma once

#include <stdexcept>
#include <string>

namespace adashift {

/// Invalid configuration (hyperparameter ranges, partition mismatches, ...).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// An optimizer step was rejected (non-finite gradient, diverged update).
struct StepError : std::runtime_error {
    explicit StepError(const std::string& what) : std::runtime_error(what) {}
};

/// Statistically degenerate input (e.g. zero variance passed to pearson).
struct DegenerateInput : std::invalid_argument {
    explicit DegenerateInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A required trajectory record is missing or out of range.
struct MissingRecord : std::out_of_range {
    explicit MissingRecord(const std::string& what) : std::out_of_range(what) {}
};

/// File / parsing problems for datasets, configs and CSV output.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adashift
