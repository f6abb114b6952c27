#pragma once

// Length statistics, element coverage, count deltas and PME similarity.

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmrkit/codecs.hpp"
#include "pmrkit/model.hpp"

namespace pmrkit {

// ---------------------------------------------------------------------------
// Lengths

struct TokenizerSpec {
  enum class Kind { heuristic, bpe };
  Kind kind = Kind::heuristic;
  /// Merge table for `bpe`: one "left right" pair per line in priority order.
  std::string merges_path;
};

/// Counts tokens of a text. Copies share the loaded merge table.
class Tokenizer {
 public:
  /// Throws ConfigError when the merge table cannot be read.
  static Tokenizer load(const TokenizerSpec& spec);
  static Tokenizer heuristic() { return load({}); }

  std::size_t count(std::string_view text) const;
  std::string description() const;

 private:
  struct Merges;
  TokenizerSpec spec_;
  std::shared_ptr<const Merges> merges_;
};

struct LengthStats {
  long lines = 0;
  long tokens = 0;
  long words = 0;
  long chars = 0;
  bool operator==(const LengthStats&) const = default;
};

LengthStats length_stats(std::string_view text, const Tokenizer& tokenizer);
inline LengthStats length_stats(const PmrDocument& doc, const Tokenizer& tokenizer) {
  return length_stats(doc.text, tokenizer);
}

// ---------------------------------------------------------------------------
// Coverage and counts

struct CoverageReport {
  PmrId pmr = PmrId::bpmn;
  long representable = 0;
  long total = 0;
  /// 1.0 for a model without countable elements.
  double ratio = 1.0;

  /// `ratio` with exactly four decimals.
  std::string ratio_text() const;
};

CoverageReport element_coverage(const ProcessModel& model, PmrId pmr);

/// Per-type generated - gold.
ElementCounts element_count_delta(const ProcessModel& generated, const ProcessModel& gold);

// ---------------------------------------------------------------------------
// Semantic matching

enum class MatchBackend { exact, lexical, embedding };

std::string_view to_string(MatchBackend backend);
std::optional<MatchBackend> match_backend_from_string(std::string_view text);

struct MatcherConfig {
  double threshold = 0.7;
  MatchBackend backend = MatchBackend::lexical;
  /// Embedding service endpoint and bearer token.
  std::string embedding_url;
  std::string embedding_token;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds timeout{30000};
};

struct Match {
  std::size_t i = 0;
  std::size_t j = 0;
  double similarity = 0.0;
  bool operator==(const Match&) const = default;
};

/// Lowercased, stemmed word set of a label.
std::vector<std::string> lexical_terms(std::string_view text);
/// Dice coefficient over the two term sets; two term-free texts score 1.0.
double lexical_similarity(std::string_view a, std::string_view b);

/// Candidates with similarity >= threshold, ordered by (similarity desc, x text asc, y text asc,
/// i asc, j asc), accepted greedily while both indices are free.
std::vector<Match> greedy_match(const std::vector<std::vector<double>>& similarity,
                                const std::vector<std::string>& xs, const std::vector<std::string>& ys,
                                double threshold);

/// Pairwise similarity through a configured backend. Embeddings are cached per text, so one
/// matcher should be reused across the categories of a comparison.
class Matcher {
 public:
  /// Throws ConfigError when the threshold is outside [0,1] or the embedding URL is missing.
  explicit Matcher(MatcherConfig config);

  const MatcherConfig& config() const { return config_; }
  std::vector<std::vector<double>> similarity(const std::vector<std::string>& xs,
                                              const std::vector<std::string>& ys);
  std::vector<Match> match(const std::vector<std::string>& xs, const std::vector<std::string>& ys);

 private:
  void embed_missing(const std::vector<std::string>& texts);

  MatcherConfig config_;
  std::map<std::string, std::vector<double>> embeddings_;
};

std::vector<Match> semantic_match(const std::vector<std::string>& xs, const std::vector<std::string>& ys,
                                  const MatcherConfig& config);

// ---------------------------------------------------------------------------
// PME similarity

struct CategoryScore {
  double dsc = 1.0;
  std::size_t matches = 0;
  std::size_t generated = 0;
  std::size_t gold = 0;
  /// Indices refer to the category's element order in the generated and gold bundles.
  std::vector<Match> pairs;
};

/// 2m / (a + b); 1.0 when both sides are empty.
double dice(std::size_t matches, std::size_t a, std::size_t b);

struct SimilarityReport {
  /// Pools tasks, events, gateways and sequence flows.
  CategoryScore overall;
  CategoryScore tasks;
  CategoryScore events;
  CategoryScore gateways;
  CategoryScore gateway_decisions;
  CategoryScore gateway_types;
  CategoryScore sequence_flows;
};

inline constexpr std::array<std::string_view, 7> kSimilarityCategories = {
    "overall", "tasks", "events", "gateways", "gateway_decisions", "gateway_types", "sequence_flows",
};
const CategoryScore& category(const SimilarityReport& report, std::string_view name);

SimilarityReport pme_similarity(const PmeBundle& generated, const PmeBundle& gold, Matcher& matcher);
SimilarityReport pme_similarity(const PmeBundle& generated, const PmeBundle& gold, const MatcherConfig& config);

}  // namespace pmrkit
