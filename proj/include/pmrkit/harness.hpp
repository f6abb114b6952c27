#pragma once

// Dataset pipeline: ingestion, batch conversion, ground-truth reports, generation runs and
// evaluation of generated models.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pmrkit/codecs.hpp"
#include "pmrkit/llm.hpp"
#include "pmrkit/metrics.hpp"
#include "pmrkit/model.hpp"

namespace pmrkit {

/// Tasks, start/end events, exclusive/parallel gateways and sequence flows, with the
/// conditions and decisions that label them.
ElementTypeSet standard_element_set();

/// "all" or a comma-separated list of PMR names. Throws ConfigError on unknown names.
std::vector<PmrId> parse_pmr_list(std::string_view text);

// ---------------------------------------------------------------------------
// Configuration

struct HarnessConfig {
  GenerationConfig generation;
  MatcherConfig matcher;
  TokenizerSpec tokenizer;
  std::size_t concurrency = 4;
};

/// Reads `key = value` lines (`#` comments, optional quotes) or a flat JSON object. Unknown keys
/// and malformed values raise ConfigError.
HarnessConfig parse_config(std::string_view text);
HarnessConfig load_config(const std::optional<std::filesystem::path>& path);
/// PMRKIT_API_BASE, PMRKIT_API_KEY, PMRKIT_MODEL, PMRKIT_EMBEDDING_URL, PMRKIT_EMBEDDING_TOKEN.
void apply_environment(HarnessConfig& config);

// ---------------------------------------------------------------------------
// Dataset

struct DatasetCase {
  std::string id;
  std::string description;
  std::string gold_bpmn;
  /// mangler, pmo_benchmark, pet7, bpmn_research, ccc19 or empty when unknown.
  std::string source;
  ProcessModel gold;
};

struct CaseIssue {
  std::string case_id;
  std::string message;
  bool operator==(const CaseIssue&) const = default;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<DatasetCase> cases;  // sorted by id
  std::vector<CaseIssue> issues;   // cases that failed to load
};

/// One directory per case holding description.txt, model.bpmn and an optional manifest.json
/// with a "source" tag. Throws DatasetError when the path is missing or holds no case at all.
Dataset ingest(const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, std::string, long, double>;

struct Table {
  std::string name;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;
};

/// Aligned text with numbers rounded to two decimals.
std::string render_text(const Table& table);
/// Comma-separated with shortest round-trip numbers.
std::string render_csv(const Table& table);

struct Report {
  std::string kind;
  std::string run_id;
  /// File name of the manifest this report cites, relative to the report directory's parent.
  std::string manifest;
  std::vector<Table> tables;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const Report& report);
std::string render_text(const Report& report);
/// Writes <stem>.json, <stem>.txt and <stem>_<table>.csv atomically.
void write_report(const Report& report, const std::filesystem::path& dir, std::string_view stem);

// ---------------------------------------------------------------------------
// Ground truth

struct ConversionEntry {
  std::string case_id;
  PmrId pmr = PmrId::bpmn;
  bool converted = false;
  /// Verdict reason for excluded documents.
  std::string reason;
  std::size_t losses = 0;
};

struct ConversionSummary {
  std::string run_id;
  std::vector<PmrId> pmrs;
  std::vector<std::string> case_ids;
  std::vector<ConversionEntry> entries;  // ordered by case id, then PMR
  std::vector<CaseIssue> issues;

  /// Fraction of cases without a document for `pmr`.
  double exclusion_fraction(PmrId pmr) const;
};

/// <dir>/<case>/<pmr name><extension>, e.g. case_01/mermaid.mmd.
std::filesystem::path document_path(const std::filesystem::path& dir, std::string_view case_id, PmrId pmr);

/// Writes every convertible (case, PMR) document plus a copy of the description, verifies each
/// by decoding it again and writes convert_summary.json and manifest.json. Throws RoundTripError
/// when a document does not survive decoding.
ConversionSummary convert_all(const Dataset& dataset, const std::vector<PmrId>& pmrs,
                              const std::filesystem::path& out_dir, std::size_t jobs = 1);

ConversionSummary read_conversion_summary(const std::filesystem::path& dir);

/// Element-count means of the gold models (restricted to the standard set unless `full`).
Report dataset_stats(const Dataset& dataset, bool full);
/// Mean element coverage of the gold models per PMR.
Report dataset_coverage(const Dataset& dataset, const std::vector<PmrId>& pmrs);

/// Length table against the BPMN baseline, coverage, counts and convertibility, read from a
/// convert_all output directory.
Report report_ground_truth(const std::filesystem::path& convert_dir, const Tokenizer& tokenizer);

// ---------------------------------------------------------------------------
// Generation and evaluation

std::filesystem::path record_path(const std::filesystem::path& run_dir, std::string_view case_id, PmrId pmr);

struct GenerationSummary {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::vector<CaseIssue> failures;
  /// True when a failure was a transport-level error.
  bool transport_failure = false;
};

/// One record per (case, PMR) under `run_dir`; existing records are kept unless `overwrite`.
GenerationSummary run_generation(const Dataset& dataset, const std::vector<PmrId>& pmrs,
                                 const std::filesystem::path& run_dir, const HarnessConfig& config,
                                 Transport& transport, bool standardized, bool overwrite);

/// Scores every record against the ground-truth PMR model of its case. Unusable generations
/// count as empty models and raise the invalid rate.
Report evaluate_generated(const std::filesystem::path& run_dir, const Dataset& dataset,
                          const std::vector<PmrId>& pmrs, Matcher& matcher);

}  // namespace pmrkit
