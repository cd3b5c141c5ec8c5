#include "maleval/errors.hpp"

namespace maleval {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::DuplicateSignature: return "DuplicateSignature";
    case ErrorKind::CyclicReplacement: return "CyclicReplacement";
    case ErrorKind::EmptyReachableSet: return "EmptyReachableSet";
    case ErrorKind::EmptyEntrypointSet: return "EmptyEntrypointSet";
    case ErrorKind::GatewayError: return "GatewayError";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::ProviderError: return "ProviderError";
    case ErrorKind::UnparseableReply: return "UnparseableReply";
    case ErrorKind::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorKind::MixedMode: return "MixedMode";
    case ErrorKind::TaxonomyViolation: return "TaxonomyViolation";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::ClassifierNotConverged: return "ClassifierNotConverged";
    case ErrorKind::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::NoBehaviors: return "NoBehaviors";
    case ErrorKind::MissingReport: return "MissingReport";
    case ErrorKind::ScaleMismatch: return "ScaleMismatch";
    case ErrorKind::DegenerateGroups: return "DegenerateGroups";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace maleval
