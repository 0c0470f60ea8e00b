#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qeloop {

enum class Errc {
  // ingestion
  DuplicateId,
  EmptyBody,
  NoArtefactsFound,
  NoScenarios,
  StepOutsideScenario,
  UnterminatedExamplesTable,
  MissingExpectation,
  MissingStep,
  // text / embedding / similarity
  EmptyAfterSegmentation,
  EmptyText,
  DimensionMismatch,
  ProviderMismatch,
  ProviderUnavailable,
  TooFewSegments,
  // rubric / generation
  WrongKind,
  EmptyCorpus,
  MalformedProviderOutput,
  // orchestration
  CycleLimitExceeded,
  UnknownPairId,
  ConflictingDecisions,
  InvalidDecision,
  // reporting / io / config
  NegativeOps,
  InvalidRow,
  IoFailure,
  InvalidConfig,
  NoCyclesCompleted,
};

std::string_view errc_name(Errc code);

// Validation errors are caused by bad input; everything else (provider, io)
// is environmental. The CLI maps the two families to different exit codes.
bool is_validation_error(Errc code);

/// Error carrying a machine-readable code plus the offending subject
/// (an artefact id, a line number, a path, ...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& detail = {});

  Errc code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  Errc code_;
  std::string subject_;
};

}  // namespace qeloop
