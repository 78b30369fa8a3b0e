#pragma once

#include <stdexcept>
#include <string>

namespace sgppsl {

// Malformed input text (CoNLL / partial-annotation files).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (featurizer dimension, grid settings, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent or missing data (no gold labels, shape mismatch, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure (Cholesky breakdown, non-finite objective, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sgppsl
