#pragma once

#include <stdexcept>
#include <string>

namespace mpabc {

// Shape mismatch between matrix operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input outside the mathematical domain of an operation (non-finite, empty, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A factorization or numerical procedure broke down.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameters do not define a valid model.
struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Requested scheme cannot be applied to the model.
struct UnsupportedScheme : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Trajectory cannot be summarized (overflowed, too short, zero variance).
struct SummaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration. The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A run finished without a usable result. The CLI maps this to exit code 3.
struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable external time series.
struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace mpabc
