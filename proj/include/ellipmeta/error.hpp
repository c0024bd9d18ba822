#pragma once

#include <stdexcept>
#include <string>

namespace ellipmeta {

enum class ErrorCode {
  kInvalidDimension,
  kDimensionMismatch,
  kNotPositiveDefinite,
  kDomain,
  kGeneratorUnusable,
  kUnsupportedSampler,
  kInvalidDof,
  kPriorEvaluation,
  kMarginalEvaluation,
  kUndefinedMoment,
  kDegenerateProposal,
  kGateRejection,
  kEmptyDraws,
  kGridTooSmall,
  kInput,
};

const char* to_string(ErrorCode code);

// Base exception for everything the library reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(int pivot, double value, const std::string& context = {});
  /// Zero-based index of the first Cholesky pivot that failed the tolerance.
  int pivot() const noexcept { return pivot_; }
  double pivot_value() const noexcept { return value_; }

 private:
  int pivot_;
  double value_;
};

}  // namespace ellipmeta
