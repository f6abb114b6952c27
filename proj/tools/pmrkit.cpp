// Command-line front end. Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 transport error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pmrkit/errors.hpp"
#include "pmrkit/harness.hpp"

namespace fs = std::filesystem;
using namespace pmrkit;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

PmrId resolve_pmr(const std::string& name, const std::string& path, const char* what) {
  if (!name.empty()) {
    auto p = pmr_from_string(name);
    if (!p) throw ConfigError(std::string("unknown ") + what + " PMR '" + name + "'");
    return *p;
  }
  if (auto p = pmr_from_path(path)) return *p;
  throw ConfigError(std::string("cannot infer the ") + what + " PMR from '" + path + "'; pass it explicitly");
}

void emit(const Report& report, const std::string& out_dir, const std::string& stem, const std::string& format) {
  if (!out_dir.empty()) write_report(report, out_dir, stem);
  if (format == "json") {
    std::cout << to_json(report).dump(2) << "\n";
  } else if (format == "csv") {
    for (const Table& t : report.tables) std::cout << "# " << t.name << "\n" << render_csv(t);
  } else {
    std::cout << render_text(report);
  }
}

struct Options {
  std::string config_path;
  // convert / validate
  std::string from, to, input = "-", output;
  bool strict = false;
  // dataset work
  std::string dataset, out_dir, pmrs = "all", run_dir, convert_dir, tokenizer, format = "text";
  std::size_t jobs = 1;
  bool full = false, full_elements = false, overwrite = false;
};

HarnessConfig configuration(const Options& o) {
  HarnessConfig c = load_config(o.config_path.empty() ? std::nullopt : std::optional<fs::path>(o.config_path));
  apply_environment(c);
  if (!o.tokenizer.empty())
    c.tokenizer = o.tokenizer == "heuristic" ? TokenizerSpec{} : TokenizerSpec{TokenizerSpec::Kind::bpe, o.tokenizer};
  return c;
}

int run_convert(const Options& o) {
  const std::string text = read_input(o.input);
  const PmrId from = resolve_pmr(o.from, o.input, "source");
  const PmrId to = resolve_pmr(o.to, o.output, "target");
  DecodeResult in = decode(text, from, {o.strict});
  for (const auto& w : in.warnings) std::cerr << "warning: " << w << "\n";
  PmrDocument doc = encode(in.model, to);
  for (const Loss& l : doc.loss_report) std::cerr << "dropped " << to_string(l.type) << " " << l.element_id << ": " << l.reason << "\n";
  if (o.output.empty() || o.output == "-") std::cout << doc.text;
  else write_file_atomic(o.output, doc.text);
  return kOk;
}

int run_validate(const Options& o) {
  const std::string text = read_input(o.input);
  const PmrId pmr = resolve_pmr(o.from, o.input, "input");
  DecodeResult in = decode(text, pmr, {o.strict});
  for (const auto& w : in.warnings) std::cerr << "warning: " << w << "\n";
  if (auto v = validate(in.model); !v.empty()) {
    for (const Violation& x : v) std::cerr << to_string(x.kind) << " " << x.element_id << ": " << x.message << "\n";
    return kData;
  }
  PmrDocument again = encode(in.model, pmr);
  ProcessModel back = decode(again).model;
  const ProcessModel expected = restrict_to(in.model, capabilities(pmr).supported);
  if (!canonical_equal(expected, back)) throw RoundTripError("document does not survive a round trip through " + std::string(to_string(pmr)));
  const ElementCounts c = count_elements(in.model);
  std::cout << "ok: " << c.nodes() << " nodes, " << c[ElementType::sequence_flow] << " sequence flows\n";
  return kOk;
}

int run_convert_all(const Options& o) {
  const Dataset d = ingest(o.dataset);
  for (const auto& i : d.issues) std::cerr << "case " << i.case_id << ": " << i.message << "\n";
  const ConversionSummary s = convert_all(d, parse_pmr_list(o.pmrs), o.out_dir, o.jobs);
  std::size_t written = 0;
  for (const auto& e : s.entries) written += e.converted ? 1 : 0;
  std::cout << "converted " << s.case_ids.size() << " cases: " << written << " documents, "
            << s.entries.size() - written << " excluded\n";
  for (PmrId p : s.pmrs)
    if (capabilities(p).requires_block_structure)
      std::cout << "  " << to_string(p) << " exclusion fraction " << s.exclusion_fraction(p) << "\n";
  return d.issues.empty() ? kOk : kData;
}

int run_stats(const Options& o) {
  const Dataset d = ingest(o.dataset);
  for (const auto& i : d.issues) std::cerr << "case " << i.case_id << ": " << i.message << "\n";
  emit(dataset_stats(d, o.full), o.out_dir, "stats", o.format);
  return kOk;
}

int run_coverage(const Options& o) {
  const Dataset d = ingest(o.dataset);
  for (const auto& i : d.issues) std::cerr << "case " << i.case_id << ": " << i.message << "\n";
  emit(dataset_coverage(d, parse_pmr_list(o.pmrs)), o.out_dir, "coverage", o.format);
  return kOk;
}

int run_generate(const Options& o) {
  const HarnessConfig c = configuration(o);
  const Dataset d = ingest(o.dataset);
  for (const auto& i : d.issues) std::cerr << "case " << i.case_id << ": " << i.message << "\n";
  HttpTransport transport;
  const GenerationSummary s =
      run_generation(d, parse_pmr_list(o.pmrs), o.run_dir, c, transport, !o.full_elements, o.overwrite);
  for (const auto& f : s.failures) std::cerr << "case " << f.case_id << ": " << f.message << "\n";
  std::cout << "generated " << s.written << " records, kept " << s.skipped << ", failed " << s.failures.size() << "\n";
  return s.transport_failure ? kTransport : kOk;
}

int run_evaluate(const Options& o) {
  const HarnessConfig c = configuration(o);
  const Dataset d = ingest(o.dataset);
  Matcher matcher(c.matcher);
  const Report r = evaluate_generated(o.run_dir, d, parse_pmr_list(o.pmrs), matcher);
  for (const auto& s : r.details["skipped"]) std::cerr << "case " << s["case"].get<std::string>() << ": " << s["message"].get<std::string>() << "\n";
  emit(r, o.out_dir.empty() ? (fs::path(o.run_dir) / "report").string() : o.out_dir, "evaluation", o.format);
  return kOk;
}

int run_report(const Options& o) {
  const HarnessConfig c = configuration(o);
  const Tokenizer tokenizer = Tokenizer::load(c.tokenizer);
  const Report r = report_ground_truth(o.convert_dir, tokenizer);
  emit(r, o.out_dir.empty() ? (fs::path(o.convert_dir) / "report").string() : o.out_dir, "ground_truth", o.format);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convert, validate and evaluate textual process model representations"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "Configuration file (key = value lines or a JSON object)");

  std::string pmr_help = "PMR name:";
  for (PmrId p : kAllPmrs) pmr_help += " " + std::string(to_string(p));

  auto* convert = app.add_subcommand("convert", "Convert one document between PMRs");
  convert->add_option("--from", o.from, pmr_help + " (default: from the input file name)");
  convert->add_option("--to", o.to, "Target PMR (default: from the output file name)");
  convert->add_option("-i,--input", o.input, "Input file, '-' for stdin");
  convert->add_option("-o,--output", o.output, "Output file (default: stdout)");
  convert->add_flag("--strict", o.strict, "Reject recoverable irregularities");

  auto* validate_cmd = app.add_subcommand("validate", "Check that a document parses, is well-formed and round-trips");
  validate_cmd->add_option("--as", o.from, pmr_help + " (default: from the file name)");
  validate_cmd->add_option("-i,--input", o.input, "Input file, '-' for stdin")->required();
  validate_cmd->add_flag("--strict", o.strict, "Reject recoverable irregularities");

  auto* dataset = app.add_subcommand("dataset", "Dataset-wide operations");
  dataset->require_subcommand(1);
  auto* convert_all_cmd = dataset->add_subcommand("convert-all", "Write the ground-truth document of every case and PMR");
  auto* stats = dataset->add_subcommand("stats", "Element counts of the gold models");
  auto* coverage = dataset->add_subcommand("coverage", "Element coverage of the gold models per PMR");
  for (auto* sub : {convert_all_cmd, stats, coverage}) {
    sub->add_option("--dataset", o.dataset, "Dataset directory")->required();
    sub->add_option("--format", o.format, "Printed format: text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));
  }
  convert_all_cmd->add_option("-o,--out", o.out_dir, "Output directory")->required();
  convert_all_cmd->add_option("--pmrs", o.pmrs, "'all' or a comma-separated PMR list");
  convert_all_cmd->add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  stats->add_option("-o,--out", o.out_dir, "Write the report files here");
  stats->add_flag("--full", o.full, "Count every element instead of the standard set");
  coverage->add_option("-o,--out", o.out_dir, "Write the report files here");
  coverage->add_option("--pmrs", o.pmrs, "'all' or a comma-separated PMR list");

  auto* generate_cmd = app.add_subcommand("generate", "Ask a language model for every (case, PMR) pair");
  generate_cmd->add_option("--dataset", o.dataset, "Dataset directory")->required();
  generate_cmd->add_option("--run", o.run_dir, "Run directory for generation records")->required();
  generate_cmd->add_option("--pmrs", o.pmrs, "'all' or a comma-separated PMR list");
  generate_cmd->add_flag("--full-elements", o.full_elements, "Ask for pools, lanes and message flows as well");
  generate_cmd->add_flag("--overwrite", o.overwrite, "Replace existing records");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a generation run against the ground truth");
  evaluate_cmd->add_option("--dataset", o.dataset, "Dataset directory")->required();
  evaluate_cmd->add_option("--run", o.run_dir, "Run directory")->required();
  evaluate_cmd->add_option("--pmrs", o.pmrs, "'all' or a comma-separated PMR list");
  evaluate_cmd->add_option("-o,--out", o.out_dir, "Report directory (default: <run>/report)");
  evaluate_cmd->add_option("--format", o.format, "Printed format: text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

  auto* report = app.add_subcommand("report", "Length, coverage and convertibility tables of a convert-all output");
  report->add_option("--convert-dir", o.convert_dir, "Directory written by 'dataset convert-all'")->required();
  report->add_option("-o,--out", o.out_dir, "Report directory (default: <convert-dir>/report)");
  report->add_option("--tokenizer", o.tokenizer, "'heuristic' or a BPE merges file");
  report->add_option("--format", o.format, "Printed format: text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*convert) return run_convert(o);
    if (*validate_cmd) return run_validate(o);
    if (*convert_all_cmd) return run_convert_all(o);
    if (*stats) return run_stats(o);
    if (*coverage) return run_coverage(o);
    if (*generate_cmd) return run_generate(o);
    if (*evaluate_cmd) return run_evaluate(o);
    if (*report) return run_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const ApiError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const ProtocolError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
