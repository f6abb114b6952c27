#pragma once

// Synthetic dataset directories and record fixtures for harness tests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pmrkit/bpmn.hpp"
#include "pmrkit/harness.hpp"
#include "support/generators.hpp"

namespace pmrkit::testing {

namespace fs = std::filesystem;

/// A fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "pmrkit_test_XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline void write_case(const fs::path& root, const std::string& id, const ProcessModel& gold,
                       const std::string& description, const std::string& source = "") {
  spit(root / id / "description.txt", description);
  spit(root / id / "model.bpmn", bpmn::serialize_bpmn(gold, true).xml_text);
  if (!source.empty()) spit(root / id / "manifest.json", "{\"source\": \"" + source + "\"}\n");
}

inline std::string describe_model(const ProcessModel& m) {
  std::string text = "The process involves the following steps:";
  for (const Node& n : m.nodes)
    if (n.label) text += " " + *n.label + ";";
  return text + " and then it ends.\n";
}

/// `n` cases: two thirds block-structured (expanded random trees), the rest arbitrary graphs
/// with pools, lanes and message flows.
inline std::vector<ProcessModel> write_synthetic_dataset(const fs::path& root, std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<ProcessModel> golds;
  for (int i = 0; i < n; ++i) {
    ProcessModel m;
    if (i % 3 == 2) {
      ModelOptions o{ElementTypeSet::all()};
      m = random_model(rng, o);
    } else {
      m = rename_and_shuffle(expand(random_tree(rng)), rng);
    }
    char id[32];
    std::snprintf(id, sizeof id, "case_%03d", i);
    write_case(root, id, m, describe_model(m), i % 2 ? "mangler" : "pet7");
    golds.push_back(std::move(m));
  }
  return golds;
}

/// Replaces up to `k` non-looping Exclusive blocks, whose branches hold no further Exclusive,
/// by the steps of their first branch. Returns the number replaced.
inline int collapse_exclusive_blocks(BranchTree& t, int k) {
  auto holds_exclusive = [](const BranchTree& x, auto&& self) -> bool {
    if (x.kind == BranchTree::Kind::exclusive) return true;
    for (const auto& c : x.children)
      if (self(c, self)) return true;
    for (const auto& b : x.branches)
      for (const auto& s : b.steps)
        if (self(s, self)) return true;
    return false;
  };
  int done = 0;
  auto visit = [&](BranchTree& x, auto&& self) -> void {
    if (done >= k) return;
    if (x.kind == BranchTree::Kind::exclusive && !x.looping) {
      bool nested = false;
      for (const auto& b : x.branches)
        for (const auto& s : b.steps) nested = nested || holds_exclusive(s, holds_exclusive);
      if (!nested) {
        BranchTree replacement = BranchTree::sequence(x.branches.front().steps);
        x = std::move(replacement);
        ++done;
        return;
      }
    }
    for (auto& c : x.children) self(c, self);
    for (auto& b : x.branches)
      for (auto& s : b.steps) self(s, self);
  };
  visit(t, visit);
  return done;
}

inline std::string chat_completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

/// A stored generation record whose response is `raw`.
inline void write_record(const fs::path& run_dir, const std::string& case_id, PmrId pmr, const std::string& raw) {
  GenerationRecord r;
  r.case_id = case_id;
  r.pmr = pmr;
  r.model = "fixture";
  r.raw_response = raw;
  try {
    r.extracted_text = extract_model_text(raw, pmr);
    decode(*r.extracted_text, pmr);
    r.status = ParseStatus::ok;
  } catch (const ExtractionError& e) {
    r.status = ParseStatus::extraction_failed;
    r.error = e.what();
  } catch (const Error& e) {
    r.status = ParseStatus::parse_failed;
    r.error = e.what();
  }
  write_file_atomic(record_path(run_dir, case_id, pmr), record_to_json(r));
}

}  // namespace pmrkit::testing
