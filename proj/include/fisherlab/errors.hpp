#pragma once

#include <stdexcept>
#include <string>

namespace fisherlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FISHERLAB_DEFINE_ERROR(Name)             \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(#Name ": " + what) {}            \
  }

FISHERLAB_DEFINE_ERROR(InvalidMatrix);
FISHERLAB_DEFINE_ERROR(InvalidDirection);
FISHERLAB_DEFINE_ERROR(InvalidSubspace);
FISHERLAB_DEFINE_ERROR(InvalidDataset);
FISHERLAB_DEFINE_ERROR(InvalidInput);
FISHERLAB_DEFINE_ERROR(CalibrationFailed);
FISHERLAB_DEFINE_ERROR(NotAboveThreshold);
FISHERLAB_DEFINE_ERROR(InsufficientTrajectory);
FISHERLAB_DEFINE_ERROR(SingularCovariance);
FISHERLAB_DEFINE_ERROR(ConfigError);

#undef FISHERLAB_DEFINE_ERROR

/// Raised when a Loewner sandwich hypothesis does not hold; carries the
/// offending eigenvalue of the difference matrix.
class PreconditionFailed : public Error {
 public:
  PreconditionFailed(const std::string& what, double witness)
      : Error("PreconditionFailed: " + what), witness_(witness) {}
  double witness() const noexcept { return witness_; }

 private:
  double witness_;
};

}  // namespace fisherlab
