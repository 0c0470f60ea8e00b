#include "qeloop/error.hpp"

namespace qeloop {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyBody: return "EmptyBody";
    case Errc::NoArtefactsFound: return "NoArtefactsFound";
    case Errc::NoScenarios: return "NoScenarios";
    case Errc::StepOutsideScenario: return "StepOutsideScenario";
    case Errc::UnterminatedExamplesTable: return "UnterminatedExamplesTable";
    case Errc::MissingExpectation: return "MissingExpectation";
    case Errc::MissingStep: return "MissingStep";
    case Errc::EmptyAfterSegmentation: return "EmptyAfterSegmentation";
    case Errc::EmptyText: return "EmptyText";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ProviderMismatch: return "ProviderMismatch";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::TooFewSegments: return "TooFewSegments";
    case Errc::WrongKind: return "WrongKind";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::MalformedProviderOutput: return "MalformedProviderOutput";
    case Errc::CycleLimitExceeded: return "CycleLimitExceeded";
    case Errc::UnknownPairId: return "UnknownPairId";
    case Errc::ConflictingDecisions: return "ConflictingDecisions";
    case Errc::InvalidDecision: return "InvalidDecision";
    case Errc::NegativeOps: return "NegativeOps";
    case Errc::InvalidRow: return "InvalidRow";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NoCyclesCompleted: return "NoCyclesCompleted";
  }
  return "Unknown";
}

bool is_validation_error(Errc code) {
  switch (code) {
    case Errc::ProviderUnavailable:
    case Errc::MalformedProviderOutput:
    case Errc::IoFailure:
      return false;
    default:
      return true;
  }
}

namespace {

std::string render(Errc code, const std::string& subject, const std::string& detail) {
  std::string out{errc_name(code)};
  if (!subject.empty()) out += "(" + subject + ")";
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace

Error::Error(Errc code, std::string subject, const std::string& detail)
    : std::runtime_error(render(code, subject, detail)), code_(code), subject_(std::move(subject)) {}

}  // namespace qeloop
