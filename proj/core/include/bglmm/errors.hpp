#pragma once

#include <stdexcept>

namespace bglmm {

// Malformed input: CSV problems, duplicate keys, non-binary outcomes, ...
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The requested design cannot be built (missing columns, rank deficiency,
// identifiability violations). A DesignError is a kind of DataError so the
// CLI maps both to the same exit code.
struct DesignError : DataError {
  using DataError::DataError;
};

// Invalid association structure or correlation matrix (bad times, parameter
// out of range, Cholesky failure).
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative numeric procedure failed (mode search, degenerate proposal
// covariance, optimizer breakdown).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bglmm
