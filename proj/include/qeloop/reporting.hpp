#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qeloop/orchestrator.hpp"

namespace qeloop {

struct SemanticResultRow {
  std::string left_id;
  std::optional<std::string> right_id;
  std::string left_text;
  std::string right_text;
  double cosine = 0.0;
  double jaccard = 0.0;
  MatchCategory category = MatchCategory::NoMatch;
  std::optional<RecommendationAction> action;  // absent for aligned (High) pairs
  std::string rationale;
  std::string testing_impact;

  friend bool operator==(const SemanticResultRow&, const SemanticResultRow&) = default;
};

struct ImpactRow {
  std::string requirement_id;
  std::string linked_artefact_id;  // empty: no derived artefact traces here
  double traceability_cosine = 0.0;
  std::string impact_note;

  friend bool operator==(const ImpactRow&, const ImpactRow&) = default;
};

// --- row construction -------------------------------------------------------

std::vector<SemanticResultRow> semantic_rows(const AlignmentResult& alignment, const Thresholds& t,
                                             const Lexicons& lex);

// One row per derived artefact, linked to the requirement it traces to (or,
// without a trace, to the most similar requirement), plus one unlinked row
// per requirement no derived artefact covers.
std::vector<ImpactRow> impact_rows(const Corpus& requirements, const Corpus& derived, Embedder& emb,
                                   const Thresholds& t);

// --- validation, CSV and JSON -------------------------------------------------
//
// CSV: RFC 4180, CRLF line ends, header in field order, reals with 4
// decimals. JSON: {"schema": <name>, "version": 1, "rows": [...]}, reals at
// full precision. validate_rows throws InvalidRow("<index>", reason).

void validate_rows(const std::vector<SemanticResultRow>& rows);
void validate_rows(const std::vector<ImpactRow>& rows);
void validate_rows(const std::vector<UpdatedRequirementRow>& rows);
void validate_rows(const std::vector<SummaryRecord>& rows);

std::string to_csv(const std::vector<SemanticResultRow>& rows);
std::string to_csv(const std::vector<ImpactRow>& rows);
std::string to_csv(const std::vector<UpdatedRequirementRow>& rows);
std::string to_csv(const std::vector<SummaryRecord>& rows);

nlohmann::json to_json_doc(const std::vector<SemanticResultRow>& rows);
nlohmann::json to_json_doc(const std::vector<ImpactRow>& rows);
nlohmann::json to_json_doc(const std::vector<UpdatedRequirementRow>& rows);
nlohmann::json to_json_doc(const std::vector<SummaryRecord>& rows);

std::vector<SemanticResultRow> parse_semantic_results_csv(std::string_view text);
std::vector<ImpactRow> parse_impact_analysis_csv(std::string_view text);
std::vector<UpdatedRequirementRow> parse_updated_requirements_csv(std::string_view text);
std::vector<SummaryRecord> parse_overall_summary_csv(std::string_view text);

std::vector<SemanticResultRow> parse_semantic_results_json(const nlohmann::json& doc);
std::vector<ImpactRow> parse_impact_analysis_json(const nlohmann::json& doc);
std::vector<UpdatedRequirementRow> parse_updated_requirements_json(const nlohmann::json& doc);
std::vector<SummaryRecord> parse_overall_summary_json(const nlohmann::json& doc);

// RFC 4180 records; quoted fields may span lines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

// Writes "<stem>.csv" and "<stem>.json" after validating. Throws IoFailure.
void emit(const std::vector<SemanticResultRow>& rows, const std::filesystem::path& stem);
void emit(const std::vector<ImpactRow>& rows, const std::filesystem::path& stem);
void emit(const std::vector<UpdatedRequirementRow>& rows, const std::filesystem::path& stem);
void emit(const std::vector<SummaryRecord>& rows, const std::filesystem::path& stem);

// Temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// --- energy ---------------------------------------------------------------------

struct EnergyLedger {
  std::int64_t llm_ops = 0;
  double energy_per_op_kwh = 0.1;
  double grid_factor_tons_per_kwh = 0.0004;
  std::optional<std::int64_t> baseline_ops;
};

struct Co2Result {
  double energy_kwh = 0.0;
  double co2_tons = 0.0;
  std::optional<double> saved_energy_kwh;
  std::optional<double> saved_co2_tons;
};

// Product of the shortest decimal forms of a and b, rounded once to double;
// 3 * 0.0004 gives exactly the double nearest 0.0012.
double decimal_mul(double a, double b);

// energy = ops * energy_per_op; co2 = energy * grid_factor; savings use
// baseline - ops. Throws NegativeOps for negative counts or rates.
Co2Result compute_co2eq(const EnergyLedger& ledger);

struct EnergyReport {
  OpCounts ops;
  std::size_t batch_size = 0;
  std::uint64_t embedding_calls = 0;
  EnergyLedger ledger;
};

extern const std::string_view kEnergyNote;

nlohmann::json energy_json(const EnergyReport& report);

// --- workspace layout -------------------------------------------------------------

// <project_dir>/cycle-<n>/{semantic_results,impact_analysis,updated_requirements}
// and <project_dir>/{overall_summary,energy}.
std::filesystem::path cycle_dir(const std::filesystem::path& project_dir, std::uint32_t cycle);

// Reports of the most recent cycle in state.
void emit_cycle_reports(const std::filesystem::path& project_dir, const CycleState& state, PipelineContext& ctx);
// updated_requirements for every cycle with decisions.
void emit_updates(const std::filesystem::path& project_dir, const CycleState& state);
void emit_project_reports(const std::filesystem::path& project_dir, const CycleState& state, const EnergyReport& energy);

// Cumulative ops of the run, priced at `rates`.
EnergyReport make_energy_report(const CycleState& state, const PipelineContext& ctx, EnergyLedger rates);

// Everything a state change affects: the newest cycle's reports when
// `ran_cycle`, every cycle's updated_requirements, the summary and energy.
void emit_reports(const std::filesystem::path& project_dir, const CycleState& state, PipelineContext& ctx,
                  const EnergyLedger& rates, bool ran_cycle);

// JSON forms of one cycle's reports, read back from disk:
// {"cycle", "semantic_results", "impact_analysis", "updated_requirements",
// "overall_summary"}.
nlohmann::json load_report_bundle(const std::filesystem::path& project_dir, std::uint32_t cycle);

}  // namespace qeloop
