#include "pmrkit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pmrkit/bpmn.hpp"
#include "pmrkit/errors.hpp"
#include "pmrkit/structure.hpp"

namespace pmrkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kToolVersion = "pmrkit 0.1.0";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read '" + path.string() + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs fn(0..n-1) on up to `jobs` threads; the first failure in index order is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string run_id_for(const std::vector<std::string>& case_ids, const std::vector<PmrId>& pmrs, std::string_view kind) {
  std::string key(kind);
  for (const auto& id : case_ids) key += "|" + id;
  key += "#";
  for (PmrId p : pmrs) key += std::string(to_string(p)) + ",";
  return sha256_hex(key).substr(0, 12);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

ElementTypeSet standard_element_set() {
  using E = ElementType;
  return {E::task, E::start_event, E::end_event, E::exclusive_gateway, E::parallel_gateway, E::sequence_flow,
          E::condition, E::decision};
}

std::vector<PmrId> parse_pmr_list(std::string_view text) {
  const std::string t = trim_copy(text);
  if (t.empty() || t == "all") return {kAllPmrs.begin(), kAllPmrs.end()};
  std::vector<PmrId> out;
  std::stringstream in(t);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim_copy(item);
    auto p = pmr_from_string(item);
    if (!p) throw ConfigError("unknown PMR '" + item + "'");
    if (std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

double to_number(const std::string& key, const std::string& value) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("configuration key '" + key + "' expects a number, got '" + value + "'");
  return out;
}

long to_integer(const std::string& key, const std::string& value) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || out < 0)
    throw ConfigError("configuration key '" + key + "' expects a non-negative integer, got '" + value + "'");
  return out;
}

void set_key(HarnessConfig& c, const std::string& key, const std::string& value) {
  auto& g = c.generation;
  auto& m = c.matcher;
  if (key == "api_base") g.api_base = value;
  else if (key == "api_key") g.api_key = value;
  else if (key == "model") g.model = value;
  else if (key == "temperature") g.temperature = to_number(key, value);
  else if (key == "top_p") g.top_p = to_number(key, value);
  else if (key == "top_k") g.top_k = static_cast<int>(to_integer(key, value));
  else if (key == "max_tokens") g.max_tokens = static_cast<int>(to_integer(key, value));
  else if (key == "retry_count") g.retry_count = static_cast<int>(to_integer(key, value));
  else if (key == "timeout_ms") g.timeout = std::chrono::milliseconds(to_integer(key, value));
  else if (key == "backoff_ms") g.backoff = std::chrono::milliseconds(to_integer(key, value));
  else if (key == "concurrency") c.concurrency = static_cast<std::size_t>(std::max(1L, to_integer(key, value)));
  else if (key == "matcher_backend") {
    auto b = match_backend_from_string(value);
    if (!b) throw ConfigError("unknown matcher backend '" + value + "'");
    m.backend = *b;
  } else if (key == "threshold") {
    m.threshold = to_number(key, value);
    if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) throw ConfigError("threshold must lie in [0,1]");
  } else if (key == "embedding_url") m.embedding_url = value;
  else if (key == "embedding_token") m.embedding_token = value;
  else if (key == "embedding_batch_size") m.batch_size = static_cast<std::size_t>(to_integer(key, value));
  else if (key == "tokenizer") {
    if (value == "heuristic") c.tokenizer = {};
    else c.tokenizer = {TokenizerSpec::Kind::bpe, value};
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

HarnessConfig parse_config(std::string_view text) {
  HarnessConfig c;
  const std::string body = trim_copy(text);
  if (!body.empty() && body.front() == '{') {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    for (const auto& [key, value] : doc.items()) {
      if (value.is_string()) set_key(c, key, value.get<std::string>());
      else if (value.is_number() || value.is_boolean()) set_key(c, key, value.dump());
      else throw ConfigError("configuration key '" + key + "' must be a scalar");
    }
    return c;
  }
  std::size_t line_no = 0;
  std::stringstream in(body);
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = trim_copy(line);
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("configuration line " + std::to_string(line_no) + " lacks '='");
    set_key(c, trim_copy(line.substr(0, eq)), unquote(trim_copy(line.substr(eq + 1))));
  }
  return c;
}

HarnessConfig load_config(const std::optional<fs::path>& path) {
  if (!path) return {};
  std::ifstream in(*path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration '" + path->string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void apply_environment(HarnessConfig& c) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("PMRKIT_API_BASE")) c.generation.api_base = *v;
  if (auto v = env("PMRKIT_API_KEY")) c.generation.api_key = *v;
  if (auto v = env("PMRKIT_MODEL")) c.generation.model = *v;
  if (auto v = env("PMRKIT_EMBEDDING_URL")) c.matcher.embedding_url = *v;
  if (auto v = env("PMRKIT_EMBEDDING_TOKEN")) c.matcher.embedding_token = *v;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset ingest(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw DatasetError("dataset directory '" + root.string() + "' does not exist");
  Dataset d;
  d.root = root;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && !name.empty() && name.front() != '.') dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path& dir : dirs) {
    const std::string id = dir.filename().string();
    try {
      DatasetCase c;
      c.id = id;
      if (!fs::exists(dir / "description.txt")) throw DatasetError("missing description.txt");
      if (!fs::exists(dir / "model.bpmn")) throw DatasetError("missing model.bpmn");
      c.description = read_file(dir / "description.txt");
      if (trim_copy(c.description).empty()) throw DatasetError("description.txt is empty");
      c.gold_bpmn = read_file(dir / "model.bpmn");
      c.gold = bpmn::parse_bpmn(c.gold_bpmn).model;
      if (auto v = validate(c.gold); !v.empty()) throw DatasetError("gold model is not well-formed: " + v.front().message);
      if (fs::exists(dir / "manifest.json")) {
        json m;
        try {
          m = json::parse(read_file(dir / "manifest.json"));
        } catch (const json::parse_error& e) {
          throw DatasetError(std::string("manifest.json is not JSON: ") + e.what());
        }
        if (m.is_object() && m.contains("source") && m["source"].is_string()) c.source = m["source"].get<std::string>();
      }
      d.cases.push_back(std::move(c));
    } catch (const Error& e) {
      d.issues.push_back({id, e.what()});
    }
  }
  if (d.cases.empty() && d.issues.empty()) throw DatasetError("dataset '" + root.string() + "' holds no cases");
  return d;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::string shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json cell_json(const Cell& c) {
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  if (std::holds_alternative<long>(c)) return std::get<long>(c);
  if (std::holds_alternative<double>(c)) return std::get<double>(c);
  return nullptr;
}

}  // namespace

std::string render_text(const Table& table) {
  std::vector<std::vector<std::string>> cells;
  std::vector<bool> numeric(table.columns.size(), true);
  for (const auto& row : table.rows) {
    std::vector<std::string> r;
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
      const Cell c = k < row.size() ? row[k] : Cell{};
      if (std::holds_alternative<std::string>(c)) {
        r.push_back(std::get<std::string>(c));
        numeric[k] = false;
      } else if (std::holds_alternative<long>(c)) {
        r.push_back(std::to_string(std::get<long>(c)));
      } else if (std::holds_alternative<double>(c)) {
        r.push_back(fixed2(std::get<double>(c)));
      } else {
        r.push_back("-");
      }
    }
    cells.push_back(std::move(r));
  }
  std::vector<std::size_t> width(table.columns.size());
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    width[k] = table.columns[k].size();
    for (const auto& r : cells) width[k] = std::max(width[k], r[k].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    std::string out;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out += "  ";
      const std::string pad(width[k] - r[k].size(), ' ');
      out += numeric[k] && k > 0 ? pad + r[k] : r[k] + pad;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = table.title + "\n\n" + line(table.columns);
  std::size_t rule = 0;
  for (std::size_t w : width) rule += w + 2;
  out += std::string(rule >= 2 ? rule - 2 : 0, '-') + "\n";
  for (const auto& r : cells) out += line(r);
  for (const auto& n : table.notes) out += "\n" + n + "\n";
  return out;
}

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t k = 0; k < table.columns.size(); ++k) out += (k ? "," : "") + csv_escape(table.columns[k]);
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
      if (k) out += ",";
      const Cell c = k < row.size() ? row[k] : Cell{};
      if (std::holds_alternative<std::string>(c)) out += csv_escape(std::get<std::string>(c));
      else if (std::holds_alternative<long>(c)) out += std::to_string(std::get<long>(c));
      else if (std::holds_alternative<double>(c)) out += shortest(std::get<double>(c));
    }
    out += "\n";
  }
  return out;
}

json to_json(const Report& report) {
  json tables = json::array();
  for (const Table& t : report.tables) {
    json rows = json::array();
    for (const auto& row : t.rows) {
      json r = json::array();
      for (const Cell& c : row) r.push_back(cell_json(c));
      rows.push_back(std::move(r));
    }
    tables.push_back({{"name", t.name}, {"title", t.title}, {"columns", t.columns}, {"rows", rows}, {"notes", t.notes}});
  }
  return {{"kind", report.kind}, {"run_id", report.run_id}, {"manifest", report.manifest}, {"tables", tables},
          {"details", report.details}};
}

std::string render_text(const Report& report) {
  std::string out;
  for (const Table& t : report.tables) {
    if (!out.empty()) out += "\n";
    out += render_text(t);
  }
  return out;
}

void write_report(const Report& report, const fs::path& dir, std::string_view stem) {
  const std::string s(stem);
  write_file_atomic(dir / (s + ".json"), to_json(report).dump(2) + "\n");
  write_file_atomic(dir / (s + ".txt"), render_text(report));
  for (const Table& t : report.tables) write_file_atomic(dir / (s + "_" + t.name + ".csv"), render_csv(t));
}

// ---------------------------------------------------------------------------
// Ground truth

double ConversionSummary::exclusion_fraction(PmrId pmr) const {
  if (case_ids.empty()) return 0.0;
  std::size_t excluded = 0;
  for (const ConversionEntry& e : entries)
    if (e.pmr == pmr && !e.converted) ++excluded;
  return static_cast<double>(excluded) / static_cast<double>(case_ids.size());
}

fs::path document_path(const fs::path& dir, std::string_view case_id, PmrId pmr) {
  return dir / std::string(case_id) / (std::string(to_string(pmr)) + std::string(file_extension(pmr)));
}

namespace {

void verify_round_trip(const DatasetCase& c, const PmrDocument& doc) {
  const PmrCapabilities& caps = capabilities(doc.pmr);
  const std::string where = c.id + " -> " + std::string(to_string(doc.pmr));
  DecodeResult back;
  try {
    back = decode(doc);
  } catch (const Error& e) {
    throw RoundTripError(where + ": document does not decode: " + e.what());
  }
  if (caps.requires_block_structure) {
    // Branch documents normalize the graph, so the check is a fixpoint on the text.
    if (encode(back.model, doc.pmr).text != doc.text)
      throw RoundTripError(where + ": re-encoding the decoded model changes the document");
  } else if (!canonical_equal(restrict_to(c.gold, caps.supported), back.model)) {
    throw RoundTripError(where + ": decoded model differs from the source model");
  }
}

json summary_json(const ConversionSummary& s) {
  json docs = json::array();
  for (const ConversionEntry& e : s.entries)
    docs.push_back({{"case", e.case_id}, {"pmr", to_string(e.pmr)}, {"converted", e.converted}, {"reason", e.reason},
                    {"losses", e.losses}});
  json issues = json::array();
  for (const CaseIssue& i : s.issues) issues.push_back({{"case", i.case_id}, {"message", i.message}});
  json pmrs = json::array(), fractions = json::object();
  for (PmrId p : s.pmrs) {
    pmrs.push_back(to_string(p));
    fractions[std::string(to_string(p))] = s.exclusion_fraction(p);
  }
  return {{"run_id", s.run_id}, {"pmrs", pmrs}, {"cases", s.case_ids}, {"documents", docs}, {"issues", issues},
          {"exclusion_fraction", fractions}};
}

}  // namespace

ConversionSummary convert_all(const Dataset& dataset, const std::vector<PmrId>& pmrs, const fs::path& out_dir,
                              std::size_t jobs) {
  ConversionSummary s;
  s.pmrs = pmrs;
  s.issues = dataset.issues;
  for (const DatasetCase& c : dataset.cases) s.case_ids.push_back(c.id);
  s.run_id = run_id_for(s.case_ids, pmrs, "convert-all");
  fs::create_directories(out_dir);

  std::vector<std::vector<ConversionEntry>> slots(dataset.cases.size());
  parallel_for(dataset.cases.size(), jobs, [&](std::size_t i) {
    const DatasetCase& c = dataset.cases[i];
    write_file_atomic(out_dir / c.id / "description.txt", c.description);
    for (PmrId pmr : pmrs) {
      const fs::path path = document_path(out_dir, c.id, pmr);
      PmrDocument doc;
      try {
        doc = encode(c.gold, pmr);
      } catch (const NotConvertibleError& e) {
        fs::remove(path);
        slots[i].push_back({c.id, pmr, false, e.reason(), 0});
        continue;
      }
      verify_round_trip(c, doc);
      write_file_atomic(path, doc.text);
      slots[i].push_back({c.id, pmr, true, "", doc.loss_report.size()});
    }
  });
  for (auto& slot : slots)
    for (auto& e : slot) s.entries.push_back(std::move(e));

  write_file_atomic(out_dir / "convert_summary.json", summary_json(s).dump(2) + "\n");
  json manifest = {{"run_id", s.run_id},
                   {"kind", "convert-all"},
                   {"tool", kToolVersion},
                   {"dataset", fs::absolute(dataset.root).lexically_normal().string()},
                   {"case_count", s.case_ids.size()},
                   {"pmrs", summary_json(s)["pmrs"]},
                   {"created_at", utc_timestamp()}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return s;
}

ConversionSummary read_conversion_summary(const fs::path& dir) {
  const fs::path path = dir / "convert_summary.json";
  if (!fs::exists(path)) throw DatasetError("'" + dir.string() + "' holds no convert_summary.json");
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DatasetError(std::string("convert_summary.json is not JSON: ") + e.what());
  }
  ConversionSummary s;
  try {
    s.run_id = doc.at("run_id").get<std::string>();
    for (const auto& p : doc.at("pmrs")) s.pmrs.push_back(*pmr_from_string(p.get<std::string>()));
    s.case_ids = doc.at("cases").get<std::vector<std::string>>();
    for (const auto& d : doc.at("documents")) {
      s.entries.push_back({d.at("case").get<std::string>(), *pmr_from_string(d.at("pmr").get<std::string>()),
                           d.at("converted").get<bool>(), d.at("reason").get<std::string>(),
                           d.at("losses").get<std::size_t>()});
    }
    for (const auto& i : doc.at("issues")) s.issues.push_back({i.at("case").get<std::string>(), i.at("message").get<std::string>()});
  } catch (const json::exception& e) {
    throw DatasetError(std::string("convert_summary.json is malformed: ") + e.what());
  }
  return s;
}

namespace {

struct CountColumn {
  const char* name;
  long (*get)(const ElementCounts&);
};

const std::vector<CountColumn>& count_columns() {
  using E = ElementType;
  static const std::vector<CountColumn> cols = {
      {"nodes", [](const ElementCounts& c) { return c.nodes(); }},
      {"tasks", [](const ElementCounts& c) { return c[E::task]; }},
      {"events", [](const ElementCounts& c) { return c.events(); }},
      {"exclusive_gateways", [](const ElementCounts& c) { return c[E::exclusive_gateway]; }},
      {"parallel_gateways", [](const ElementCounts& c) { return c[E::parallel_gateway]; }},
      {"sequence_flows", [](const ElementCounts& c) { return c[E::sequence_flow]; }},
      {"conditions", [](const ElementCounts& c) { return c[E::condition]; }},
      {"decisions", [](const ElementCounts& c) { return c[E::decision]; }},
      {"pools", [](const ElementCounts& c) { return c[E::pool]; }},
      {"lanes", [](const ElementCounts& c) { return c[E::lane]; }},
      {"message_flows", [](const ElementCounts& c) { return c[E::message_flow]; }},
  };
  return cols;
}

Table counts_table(const std::vector<std::pair<std::string, ProcessModel>>& models, bool full, bool per_case) {
  Table t;
  t.name = "element_counts";
  t.title = full ? "Element counts of the gold models" : "Element counts of the gold models (standard element set)";
  t.columns = {"case"};
  for (const auto& col : count_columns()) t.columns.emplace_back(col.name);
  std::vector<std::vector<double>> values(count_columns().size());
  for (const auto& [id, model] : models) {
    const ElementCounts c = count_elements(full ? model : restrict_to(model, standard_element_set()));
    std::vector<Cell> row = {id};
    for (std::size_t k = 0; k < count_columns().size(); ++k) {
      const long v = count_columns()[k].get(c);
      row.emplace_back(v);
      values[k].push_back(static_cast<double>(v));
    }
    if (per_case) t.rows.push_back(std::move(row));
  }
  std::vector<Cell> mean_row = {std::string("mean")};
  for (const auto& v : values) mean_row.emplace_back(mean(v));
  t.rows.push_back(std::move(mean_row));
  t.notes.push_back("cases: " + std::to_string(models.size()) + "; nodes = tasks + events + gateways");
  return t;
}

std::vector<Table> coverage_tables(const std::vector<std::pair<std::string, ProcessModel>>& models,
                                   const std::vector<PmrId>& pmrs) {
  Table summary;
  summary.name = "coverage";
  summary.title = "Element coverage per PMR";
  summary.columns = {"pmr", "cases", "mean_percent", "pooled_percent"};
  Table by_case;
  by_case.name = "coverage_by_case";
  by_case.title = "Element coverage per case (ratio)";
  by_case.columns = {"case"};
  for (PmrId p : pmrs) by_case.columns.emplace_back(to_string(p));
  std::vector<std::vector<double>> ratios(pmrs.size());
  std::vector<long> representable(pmrs.size()), total(pmrs.size());
  for (const auto& [id, model] : models) {
    std::vector<Cell> row = {id};
    for (std::size_t k = 0; k < pmrs.size(); ++k) {
      const CoverageReport r = element_coverage(model, pmrs[k]);
      ratios[k].push_back(r.ratio);
      representable[k] += r.representable;
      total[k] += r.total;
      row.emplace_back(r.ratio);
    }
    by_case.rows.push_back(std::move(row));
  }
  for (std::size_t k = 0; k < pmrs.size(); ++k) {
    const double pooled = total[k] == 0 ? 1.0 : static_cast<double>(representable[k]) / static_cast<double>(total[k]);
    summary.rows.push_back({std::string(to_string(pmrs[k])), static_cast<long>(models.size()), 100.0 * mean(ratios[k]),
                            100.0 * pooled});
  }
  return {summary, by_case};
}

std::vector<std::pair<std::string, ProcessModel>> gold_models(const Dataset& d) {
  std::vector<std::pair<std::string, ProcessModel>> out;
  for (const DatasetCase& c : d.cases) out.emplace_back(c.id, c.gold);
  return out;
}

}  // namespace

Report dataset_stats(const Dataset& dataset, bool full) {
  Report r;
  r.kind = "dataset-stats";
  std::vector<std::string> ids;
  for (const auto& c : dataset.cases) ids.push_back(c.id);
  r.run_id = run_id_for(ids, {}, r.kind);
  r.tables.push_back(counts_table(gold_models(dataset), full, true));
  return r;
}

Report dataset_coverage(const Dataset& dataset, const std::vector<PmrId>& pmrs) {
  Report r;
  r.kind = "dataset-coverage";
  std::vector<std::string> ids;
  for (const auto& c : dataset.cases) ids.push_back(c.id);
  r.run_id = run_id_for(ids, pmrs, r.kind);
  r.tables = coverage_tables(gold_models(dataset), pmrs);
  return r;
}

Report report_ground_truth(const fs::path& convert_dir, const Tokenizer& tokenizer) {
  const ConversionSummary s = read_conversion_summary(convert_dir);
  Report r;
  r.kind = "ground-truth";
  r.run_id = s.run_id;
  r.manifest = "manifest.json";

  // Per-document lengths.
  std::map<std::pair<std::string, PmrId>, LengthStats> lengths;
  for (const ConversionEntry& e : s.entries) {
    if (!e.converted) continue;
    lengths[{e.case_id, e.pmr}] = length_stats(read_file(document_path(convert_dir, e.case_id, e.pmr)), tokenizer);
  }
  const bool has_baseline = std::find(s.pmrs.begin(), s.pmrs.end(), PmrId::bpmn) != s.pmrs.end();

  Table t;
  t.name = "lengths";
  t.title = "Mean length of ground-truth PMR models and difference to BPMN";
  t.columns = {"pmr", "cases"};
  static const char* kMetrics[] = {"lines", "tokens", "words", "chars"};
  for (const char* m : kMetrics) {
    t.columns.push_back(std::string(m) + "_mean");
    t.columns.push_back(std::string(m) + "_rel_percent");
    t.columns.push_back(std::string(m) + "_abs");
  }
  auto metric = [](const LengthStats& l, int k) -> double {
    const long v[] = {l.lines, l.tokens, l.words, l.chars};
    return static_cast<double>(v[k]);
  };
  json per_case = json::array();
  for (PmrId p : s.pmrs) {
    std::vector<std::string> subset;
    for (const auto& id : s.case_ids)
      if (lengths.count({id, p})) subset.push_back(id);
    std::vector<Cell> row = {std::string(to_string(p)), static_cast<long>(subset.size())};
    for (int k = 0; k < 4; ++k) {
      std::vector<double> own, base;
      for (const auto& id : subset) {
        own.push_back(metric(lengths.at({id, p}), k));
        if (has_baseline && lengths.count({id, PmrId::bpmn})) base.push_back(metric(lengths.at({id, PmrId::bpmn}), k));
      }
      row.emplace_back(mean(own));
      if (has_baseline && !subset.empty() && base.size() == own.size() && mean(base) > 0) {
        const double diff = mean(own) - mean(base);
        row.emplace_back(100.0 * diff / mean(base));
        row.emplace_back(diff);
      } else {
        row.emplace_back(Cell{});
        row.emplace_back(Cell{});
      }
    }
    t.rows.push_back(std::move(row));
    for (const auto& id : subset) {
      const LengthStats& l = lengths.at({id, p});
      per_case.push_back({{"case", id}, {"pmr", to_string(p)}, {"lines", l.lines}, {"tokens", l.tokens},
                          {"words", l.words}, {"chars", l.chars}});
    }
  }
  t.notes.push_back("differences use the BPMN documents of the same cases; tokenizer: " + tokenizer.description());
  r.tables.push_back(std::move(t));

  // Gold models come back from the lossless BPMN documents.
  std::vector<std::pair<std::string, ProcessModel>> golds;
  if (has_baseline) {
    for (const auto& id : s.case_ids)
      if (lengths.count({id, PmrId::bpmn}))
        golds.emplace_back(id, decode(read_file(document_path(convert_dir, id, PmrId::bpmn)), PmrId::bpmn).model);
    for (Table& c : coverage_tables(golds, s.pmrs))
      if (c.name == "coverage") r.tables.push_back(std::move(c));
    r.tables.push_back(counts_table(golds, false, false));
  }

  Table conv;
  conv.name = "convertibility";
  conv.title = "Documents per PMR";
  conv.columns = {"pmr", "converted", "excluded", "exclusion_fraction", "reasons"};
  for (PmrId p : s.pmrs) {
    long converted = 0, excluded = 0;
    std::map<std::string, long> reasons;
    for (const ConversionEntry& e : s.entries) {
      if (e.pmr != p) continue;
      if (e.converted) ++converted;
      else ++excluded, ++reasons[e.reason];
    }
    std::string why;
    for (const auto& [reason, n] : reasons) why += (why.empty() ? "" : "; ") + reason + "=" + std::to_string(n);
    conv.rows.push_back({std::string(to_string(p)), converted, excluded, s.exclusion_fraction(p), why});
  }
  if (!s.issues.empty()) conv.notes.push_back("cases that failed to load: " + std::to_string(s.issues.size()));
  r.tables.push_back(std::move(conv));
  r.details = {{"documents", per_case}};
  return r;
}

// ---------------------------------------------------------------------------
// Generation and evaluation

fs::path record_path(const fs::path& run_dir, std::string_view case_id, PmrId pmr) {
  return run_dir / std::string(case_id) / (std::string(to_string(pmr)) + ".json");
}

GenerationSummary run_generation(const Dataset& dataset, const std::vector<PmrId>& pmrs, const fs::path& run_dir,
                                 const HarnessConfig& config, Transport& transport, bool standardized,
                                 bool overwrite) {
  config.generation.validate();
  struct Job {
    const DatasetCase* c;
    PmrId pmr;
  };
  std::vector<Job> jobs;
  for (const DatasetCase& c : dataset.cases)
    for (PmrId p : pmrs) jobs.push_back({&c, p});

  GenerationSummary summary;
  std::mutex lock;
  std::vector<std::optional<CaseIssue>> failures(jobs.size());
  parallel_for(jobs.size(), config.concurrency, [&](std::size_t i) {
    const Job& job = jobs[i];
    const fs::path path = record_path(run_dir, job.c->id, job.pmr);
    if (!overwrite && fs::exists(path)) {
      std::lock_guard<std::mutex> g(lock);
      ++summary.skipped;
      return;
    }
    const PromptBundle bundle = build_prompt(job.c->description, job.pmr, standardized);
    try {
      GenerationRecord rec = generate(bundle, config.generation, transport, job.c->id);
      write_file_atomic(path, record_to_json(rec));
      std::lock_guard<std::mutex> g(lock);
      ++summary.written;
    } catch (const TransportError& e) {
      failures[i] = CaseIssue{job.c->id, std::string(to_string(job.pmr)) + ": " + e.what()};
    } catch (const ApiError& e) {
      failures[i] = CaseIssue{job.c->id, std::string(to_string(job.pmr)) + ": " + e.what()};
    } catch (const ProtocolError& e) {
      failures[i] = CaseIssue{job.c->id, std::string(to_string(job.pmr)) + ": " + e.what()};
    }
  });
  for (auto& f : failures)
    if (f) summary.failures.push_back(std::move(*f));
  summary.transport_failure = !summary.failures.empty();

  const auto& g = config.generation;
  json pmr_names = json::array();
  for (PmrId p : pmrs) pmr_names.push_back(to_string(p));
  json manifest = {{"kind", "generate"},
                   {"tool", kToolVersion},
                   {"dataset", fs::absolute(dataset.root).lexically_normal().string()},
                   {"pmrs", pmr_names},
                   {"standardized", standardized},
                   {"model", g.model},
                   {"api_base", g.api_base},
                   {"temperature", g.temperature},
                   {"top_p", g.top_p},
                   {"top_k", g.top_k ? json(*g.top_k) : json(nullptr)},
                   {"max_tokens", g.max_tokens},
                   {"retry_count", g.retry_count},
                   {"template_dir", default_template_dir().string()},
                   {"written", summary.written},
                   {"skipped", summary.skipped},
                   {"failures", summary.failures.size()},
                   {"created_at", utc_timestamp()}};
  write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

namespace {

struct Scored {
  std::string case_id;
  PmrId pmr;
  bool valid = false;
  std::string error;
  ElementCounts generated, gold;
  SimilarityReport similarity;
};

std::optional<ProcessModel> gold_for(const ProcessModel& gold, PmrId pmr) {
  const ProcessModel standard = restrict_to(gold, standard_element_set());
  try {
    return decode(encode(standard, pmr)).model;
  } catch (const NotConvertibleError&) {
    return std::nullopt;
  }
}

}  // namespace

Report evaluate_generated(const fs::path& run_dir, const Dataset& dataset, const std::vector<PmrId>& pmrs,
                          Matcher& matcher) {
  if (!fs::is_directory(run_dir)) throw DatasetError("run directory '" + run_dir.string() + "' does not exist");
  Report r;
  r.kind = "evaluation";
  std::vector<std::string> ids;
  for (const auto& c : dataset.cases) ids.push_back(c.id);
  r.run_id = run_id_for(ids, pmrs, r.kind);
  r.manifest = "manifest.json";

  std::vector<Scored> scored;
  std::vector<CaseIssue> skipped;
  for (const DatasetCase& c : dataset.cases) {
    for (PmrId p : pmrs) {
      const fs::path path = record_path(run_dir, c.id, p);
      if (!fs::exists(path)) {
        skipped.push_back({c.id, std::string(to_string(p)) + ": no generation record"});
        continue;
      }
      const std::optional<ProcessModel> gold = gold_for(c.gold, p);
      if (!gold) {
        skipped.push_back({c.id, std::string(to_string(p)) + ": ground truth is not convertible"});
        continue;
      }
      GenerationRecord rec;
      try {
        rec = record_from_json(read_file(path));
      } catch (const Error& e) {
        skipped.push_back({c.id, std::string(to_string(p)) + ": unreadable record: " + e.what()});
        continue;
      }
      Scored s{c.id, p};
      ProcessModel generated;
      try {
        const std::string text = rec.extracted_text ? *rec.extracted_text : extract_model_text(rec.raw_response, p);
        generated = decode(text, p).model;
        s.valid = true;
      } catch (const Error& e) {
        s.error = e.what();
      }
      s.generated = count_elements(generated);
      s.gold = count_elements(*gold);
      s.similarity = pme_similarity(to_pme(generated), to_pme(*gold), matcher);
      scored.push_back(std::move(s));
    }
  }

  Table counts;
  counts.name = "counts";
  counts.title = "Mean element counts of generated models and difference to the ground truth";
  counts.columns = {"pmr", "cases", "invalid_rate"};
  static const std::vector<std::string> kCounted = {"nodes", "tasks", "events", "exclusive_gateways",
                                                    "parallel_gateways", "sequence_flows"};
  for (const auto& n : kCounted) counts.columns.push_back(n);
  for (const auto& n : kCounted) counts.columns.push_back(n + "_delta");
  Table sim;
  sim.name = "similarity";
  sim.title = "Mean PME similarity (Dice-Sorensen) of generated models";
  sim.columns = {"pmr", "cases", "invalid_rate"};
  for (auto c : kSimilarityCategories) sim.columns.emplace_back(c);

  auto column = [](const std::string& name) {
    for (const auto& c : count_columns())
      if (name == c.name) return c.get;
    return count_columns().front().get;
  };
  // Ground-truth row over every case with a standard-set gold model.
  {
    std::vector<Cell> row = {std::string("ground_truth"), static_cast<long>(dataset.cases.size()), Cell{}};
    for (const auto& n : kCounted) {
      std::vector<double> v;
      for (const DatasetCase& c : dataset.cases)
        v.push_back(static_cast<double>(column(n)(count_elements(restrict_to(c.gold, standard_element_set())))));
      row.emplace_back(mean(v));
    }
    for (std::size_t k = 0; k < kCounted.size(); ++k) row.emplace_back(Cell{});
    counts.rows.push_back(std::move(row));
  }

  json rows = json::array();
  for (PmrId p : pmrs) {
    std::vector<const Scored*> mine;
    for (const Scored& s : scored)
      if (s.pmr == p) mine.push_back(&s);
    const long n = static_cast<long>(mine.size());
    long invalid = 0;
    for (const Scored* s : mine) invalid += s->valid ? 0 : 1;
    const Cell rate = n ? Cell{static_cast<double>(invalid) / static_cast<double>(n)} : Cell{};
    std::vector<Cell> crow = {std::string(to_string(p)), n, rate};
    for (const auto& name : kCounted) {
      std::vector<double> v;
      for (const Scored* s : mine) v.push_back(static_cast<double>(column(name)(s->generated)));
      crow.emplace_back(n ? Cell{mean(v)} : Cell{});
    }
    for (const auto& name : kCounted) {
      std::vector<double> v;
      for (const Scored* s : mine) v.push_back(static_cast<double>(column(name)(s->generated) - column(name)(s->gold)));
      crow.emplace_back(n ? Cell{mean(v)} : Cell{});
    }
    counts.rows.push_back(std::move(crow));

    std::vector<Cell> srow = {std::string(to_string(p)), n, rate};
    for (auto c : kSimilarityCategories) {
      std::vector<double> v;
      for (const Scored* s : mine) v.push_back(category(s->similarity, c).dsc);
      srow.emplace_back(n ? Cell{mean(v)} : Cell{});
    }
    sim.rows.push_back(std::move(srow));

    for (const Scored* s : mine) {
      json row = {{"case", s->case_id}, {"pmr", to_string(p)}, {"valid", s->valid}, {"error", s->error}};
      json delta = json::object(), scores = json::object();
      for (const auto& c : count_columns()) delta[c.name] = c.get(s->generated) - c.get(s->gold);
      for (auto c : kSimilarityCategories) scores[std::string(c)] = category(s->similarity, c).dsc;
      row["delta"] = delta;
      row["similarity"] = scores;
      rows.push_back(std::move(row));
    }
  }
  const std::string subset = "branch PMRs use only cases whose ground truth is block-structured";
  counts.notes.push_back(subset);
  sim.notes.push_back(subset + "; matcher: " + std::string(to_string(matcher.config().backend)) +
                      ", threshold " + shortest(matcher.config().threshold));
  r.tables = {counts, sim};
  json skipped_json = json::array();
  for (const auto& s : skipped) skipped_json.push_back({{"case", s.case_id}, {"message", s.message}});
  r.details = {{"rows", rows}, {"skipped", skipped_json}};
  return r;
}

}  // namespace pmrkit
