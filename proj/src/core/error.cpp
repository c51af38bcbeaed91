#include "ustab/error.hpp"

namespace ustab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kNonPositiveProbability: return "NonPositiveProbability";
    case ErrorCode::kDisconnectedTree: return "DisconnectedTree";
    case ErrorCode::kDegenerateBranching: return "DegenerateBranching";
    case ErrorCode::kNoMartingaleMeasure: return "NoMartingaleMeasure";
    case ErrorCode::kEmptyBundle: return "EmptyBundle";
    case ErrorCode::kConjugateDiverges: return "ConjugateDiverges";
    case ErrorCode::kBoundaryPoint: return "BoundaryPoint";
    case ErrorCode::kNotApplicable: return "NotApplicable";
    case ErrorCode::kNoPowerBound: return "NoPowerBound";
    case ErrorCode::kInfeasibleStart: return "InfeasibleStart";
    case ErrorCode::kSolverDiverged: return "SolverDiverged";
    case ErrorCode::kMismatchedPair: return "MismatchedPair";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace ustab
