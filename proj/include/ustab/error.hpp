#pragma once

#include <stdexcept>
#include <string>

namespace ustab {

enum class ErrorCode {
  kInvalidSpec,
  kNonPositiveProbability,
  kDisconnectedTree,
  kDegenerateBranching,
  kNoMartingaleMeasure,
  kEmptyBundle,
  kConjugateDiverges,
  kBoundaryPoint,
  kNotApplicable,
  kNoPowerBound,
  kInfeasibleStart,
  kSolverDiverged,
  kMismatchedPair,
  kEmptySet,
  kConfig,
  kIo,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the C
// layer can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ustab
