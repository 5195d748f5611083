#pragma once

#include <stdexcept>
#include <string>

namespace pirules {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad degree, shape mismatch, unknown label, ...).
struct ValidationError : Error {
  using Error::Error;
};

/// A distribution that must be normalized (some degree exactly 1) is not.
struct NotNormalizedError : ValidationError {
  using ValidationError::ValidationError;
};

/// Learning cannot proceed: no training sample passed the reliability threshold.
struct NoReliableSampleError : Error {
  std::string stage;
  NoReliableSampleError(std::string stage_id, const std::string& msg)
      : Error(msg), stage(std::move(stage_id)) {}
};

/// Input generation hit contradictory constraints on one attribute value.
struct ConflictError : Error {
  std::string attribute;
  std::size_t value_index;
  ConflictError(std::string attr, std::size_t value, const std::string& msg)
      : Error(msg), attribute(std::move(attr)), value_index(value) {}
};

/// Input generation is not uniquely invertible for this premise shape.
struct UnsupportedPremiseShapeError : Error {
  using Error::Error;
};

}  // namespace pirules
