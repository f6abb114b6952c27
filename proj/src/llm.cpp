#include "pmrkit/llm.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "http.hpp"
#include "pmrkit/errors.hpp"

namespace pmrkit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompts

std::filesystem::path default_template_dir() {
  if (const char* env = std::getenv("PMRKIT_TEMPLATE_DIR"); env && *env) return env;
  return PMRKIT_TEMPLATE_DIR;
}

namespace {

std::string read_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing prompt template '" + path.string() + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string trim_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string substitute(std::string text, std::string_view key, std::string_view value) {
  const std::string marker = "{{" + std::string(key) + "}}";
  std::string out;
  std::size_t from = 0;
  for (std::size_t at; (at = text.find(marker, from)) != std::string::npos; from = at + marker.size())
    out.append(text, from, at - from).append(value);
  out.append(text, from);
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < length; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xF];
  }
  return out;
}

PromptBundle build_prompt(std::string_view description, PmrId pmr, bool standardized,
                          const std::filesystem::path& template_dir) {
  if (normalize_label(description).empty()) throw std::invalid_argument("process description is empty");
  PromptBundle b;
  b.pmr = pmr;
  b.system_text = trim_trailing_newlines(read_template(template_dir / "system.md"));
  const std::string preamble = trim_trailing_newlines(
      substitute(read_template(template_dir / "preamble.md"), "description", description));
  const std::string instructions = trim_trailing_newlines(
      read_template(template_dir / (standardized ? "instructions_standard.md" : "instructions_full.md")));
  b.shared_preamble = preamble + "\n\n" + instructions;
  b.format_section = trim_trailing_newlines(
      read_template(template_dir / "format" / (std::string(to_string(pmr)) + ".md")));
  b.user_text = b.shared_preamble + "\n\n" + b.format_section + "\n";
  b.fingerprint = sha256_hex(b.system_text + '\0' + b.user_text);
  return b;
}

// ---------------------------------------------------------------------------
// Chat client

void GenerationConfig::validate() const {
  if (api_base.empty()) throw ConfigError("API base URL is not configured");
  if (model.empty()) throw ConfigError("model name is not configured");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0,1]");
  if (top_k && *top_k <= 0) throw ConfigError("top_k must be positive");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (retry_count < 1) throw ConfigError("retry_count must be at least 1");
}

HttpReply HttpTransport::post(const std::string& url, const std::string& body,
                              const std::vector<std::pair<std::string, std::string>>& headers,
                              std::chrono::milliseconds timeout) {
  auto r = detail::http_post(url, body, "application/json", headers, timeout);
  return {r.status, std::move(r.body)};
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::extraction_failed: return "extraction_failed";
    case ParseStatus::parse_failed: return "parse_failed";
  }
  return "?";
}

std::optional<ParseStatus> parse_status_from_string(std::string_view text) {
  for (ParseStatus s : {ParseStatus::ok, ParseStatus::extraction_failed, ParseStatus::parse_failed})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

namespace {

std::string chat_url(const std::string& base) {
  std::string url = base;
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url + "/chat/completions";
}

bool retryable(int status) { return status == 429 || status >= 500; }

std::string excerpt(const std::string& body) { return body.size() <= 300 ? body : body.substr(0, 300) + "..."; }

}  // namespace

GenerationRecord generate(const PromptBundle& bundle, const GenerationConfig& config, Transport& transport,
                          std::string case_id) {
  config.validate();
  json request = {
      {"model", config.model},
      {"messages",
       json::array({{{"role", "system"}, {"content", bundle.system_text}},
                    {{"role", "user"}, {"content", bundle.user_text}}})},
      {"temperature", config.temperature},
      {"top_p", config.top_p},
      {"max_tokens", config.max_tokens},
  };
  if (config.top_k) request["top_k"] = *config.top_k;
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config.api_key);
  const std::string url = chat_url(config.api_base);
  const std::string body = request.dump();

  GenerationRecord rec;
  rec.case_id = std::move(case_id);
  rec.pmr = bundle.pmr;
  rec.model = config.model;
  rec.prompt_fingerprint = bundle.fingerprint;

  const auto started = std::chrono::steady_clock::now();
  auto delay = config.backoff;
  HttpReply reply;
  for (int attempt = 1;; ++attempt) {
    rec.attempts = attempt;
    const bool last = attempt >= config.retry_count;
    try {
      reply = transport.post(url, body, headers, config.timeout);
    } catch (const TransportError&) {
      if (last) throw;
      std::this_thread::sleep_for(delay);
      delay *= 2;
      continue;
    }
    if (reply.status >= 200 && reply.status < 300) break;
    if (!retryable(reply.status) || last) throw ApiError(reply.status, excerpt(reply.body));
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
  rec.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json doc;
  try {
    doc = json::parse(reply.body);
  } catch (const json::exception& e) {
    throw ProtocolError("chat completion from " + url + " is not JSON: " + e.what());
  }
  try {
    const json& content = doc.at("choices").at(0).at("message").at("content");
    rec.raw_response = content.is_null() ? "" : content.get<std::string>();
    if (doc.contains("usage") && doc["usage"].is_object()) {
      const json& u = doc["usage"];
      rec.usage.prompt = u.value("prompt_tokens", 0L);
      rec.usage.completion = u.value("completion_tokens", 0L);
      rec.usage.total = u.value("total_tokens", rec.usage.prompt + rec.usage.completion);
    }
  } catch (const json::exception& e) {
    throw ProtocolError("chat completion from " + url + " lacks choices[0].message.content: " + e.what());
  }

  try {
    rec.extracted_text = extract_model_text(rec.raw_response, bundle.pmr);
  } catch (const ExtractionError& e) {
    rec.status = ParseStatus::extraction_failed;
    rec.error = e.what();
    return rec;
  }
  try {
    decode(*rec.extracted_text, bundle.pmr);
    rec.status = ParseStatus::ok;
  } catch (const Error& e) {
    rec.status = ParseStatus::parse_failed;
    rec.error = e.what();
  }
  return rec;
}

GenerationRecord generate(const PromptBundle& bundle, const GenerationConfig& config, std::string case_id) {
  HttpTransport transport;
  return generate(bundle, config, transport, std::move(case_id));
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

struct Line {
  std::size_t begin;  // offset of the first character
  std::size_t end;    // offset one past the last character, excluding the newline
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t at = 0;
  while (at <= text.size()) {
    std::size_t nl = text.find('\n', at);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back({at, nl});
    at = nl + 1;
  }
  return lines;
}

// A fence is 3+ backticks or tildes after at most three spaces of indentation.
std::optional<std::pair<char, std::size_t>> fence(std::string_view line) {
  std::size_t indent = 0;
  while (indent < line.size() && indent < 4 && line[indent] == ' ') ++indent;
  if (indent > 3 || indent >= line.size()) return std::nullopt;
  const char c = line[indent];
  if (c != '`' && c != '~') return std::nullopt;
  std::size_t n = 0;
  while (indent + n < line.size() && line[indent + n] == c) ++n;
  if (n < 3) return std::nullopt;
  return std::pair(c, n);
}

std::optional<std::string_view> last_fenced_block(std::string_view text) {
  std::optional<std::string_view> last;
  const auto lines = split_lines(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto open = fence(text.substr(lines[k].begin, lines[k].end - lines[k].begin));
    if (!open) continue;
    const std::size_t body_begin = k + 1 < lines.size() ? lines[k + 1].begin : text.size();
    std::size_t body_end = text.size();
    std::size_t close = lines.size();
    for (std::size_t m = k + 1; m < lines.size(); ++m) {
      std::string_view l = text.substr(lines[m].begin, lines[m].end - lines[m].begin);
      const auto f = fence(l);
      if (f && f->first == open->first && f->second >= open->second && trim(l).size() == f->second) {
        body_end = lines[m].begin;
        close = m;
        break;
      }
    }
    std::string_view body = text.substr(body_begin, body_end - std::min(body_begin, body_end));
    if (!trim(body).empty()) last = body;
    k = close;
  }
  return last;
}

std::size_t find_line_start(std::string_view text, std::string_view prefix) {
  for (const Line& l : split_lines(text)) {
    std::string_view line = text.substr(l.begin, l.end - l.begin);
    const auto indent = line.find_first_not_of(" \t");
    if (indent != std::string_view::npos && line.substr(indent).rfind(prefix, 0) == 0) return l.begin + indent;
  }
  return std::string_view::npos;
}

std::optional<std::string_view> span(std::string_view text, std::size_t begin, std::string_view closing) {
  if (begin == std::string_view::npos) return std::nullopt;
  const auto end = text.rfind(closing);
  if (end == std::string_view::npos || end < begin) return text.substr(begin);
  return text.substr(begin, end + closing.size() - begin);
}

std::size_t earliest(std::initializer_list<std::size_t> positions) {
  std::size_t best = std::string_view::npos;
  for (std::size_t p : positions) best = std::min(best, p);
  return best;
}

std::optional<std::string_view> anchored(std::string_view text, PmrId pmr) {
  switch (pmr) {
    case PmrId::mermaid: {
      const std::size_t at = earliest({find_line_start(text, "flowchart"), find_line_start(text, "graph ")});
      if (at == std::string_view::npos) return std::nullopt;
      return text.substr(at);
    }
    case PmrId::graphviz:
      return span(text,
                  earliest({find_line_start(text, "digraph"), find_line_start(text, "strict "),
                            find_line_start(text, "graph ")}),
                  "}");
    case PmrId::bpmn:
    case PmrId::bpmn_process:
      return span(text,
                  earliest({text.find("<?xml"), text.find("<definitions"), text.find("<bpmn:definitions"),
                            text.find("<bpmn2:definitions"), text.find("<process"), text.find("<bpmn:process")}),
                  ">");
    case PmrId::simplified_xml:
    case PmrId::bpmn_text: {
      const std::size_t at = earliest({text.find("<?xml"), text.find("<process")});
      return span(text, at, "</process>");
    }
    case PmrId::pme: return span(text, text.find('{'), "}");
    case PmrId::json_branches: {
      const std::size_t at = earliest({text.find('['), text.find('{')});
      if (at == std::string_view::npos) return std::nullopt;
      return span(text, at, text[at] == '[' ? "]" : "}");
    }
    case PmrId::powl_code: {
      const std::size_t at = earliest({find_line_start(text, "from "), find_line_start(text, "import "),
                                       text.find("= activity("), text.find("=activity(")});
      if (at == std::string_view::npos) return std::nullopt;
      // Back up to the beginning of the line holding the first assignment.
      const auto line = text.rfind('\n', at);
      return text.substr(line == std::string_view::npos ? 0 : line + 1);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string extract_model_text(std::string_view raw, PmrId pmr) {
  if (auto block = last_fenced_block(raw)) return std::string(trim(*block));
  if (auto region = anchored(raw, pmr); region && !trim(*region).empty()) return std::string(trim(*region));
  throw ExtractionError("no " + std::string(to_string(pmr)) + " model found in the response");
}

// ---------------------------------------------------------------------------
// Records

std::string record_to_json(const GenerationRecord& r) {
  json doc = {
      {"case_id", r.case_id},
      {"pmr", to_string(r.pmr)},
      {"model", r.model},
      {"prompt_fingerprint", r.prompt_fingerprint},
      {"raw_response", r.raw_response},
      {"extracted_text", r.extracted_text ? json(*r.extracted_text) : json(nullptr)},
      {"status", to_string(r.status)},
      {"error", r.error},
      {"usage", {{"prompt_tokens", r.usage.prompt}, {"completion_tokens", r.usage.completion}, {"total_tokens", r.usage.total}}},
      {"elapsed_seconds", r.elapsed_seconds},
      {"attempts", r.attempts},
  };
  return doc.dump(2) + "\n";
}

GenerationRecord record_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("generation record is not JSON: ") + e.what());
  }
  GenerationRecord r;
  try {
    r.case_id = doc.at("case_id").get<std::string>();
    const auto pmr = pmr_from_string(doc.at("pmr").get<std::string>());
    if (!pmr) throw SchemaViolation("/pmr", "unknown PMR");
    r.pmr = *pmr;
    r.model = doc.value("model", "");
    r.prompt_fingerprint = doc.value("prompt_fingerprint", "");
    r.raw_response = doc.at("raw_response").get<std::string>();
    if (doc.contains("extracted_text") && !doc["extracted_text"].is_null())
      r.extracted_text = doc["extracted_text"].get<std::string>();
    const auto status = parse_status_from_string(doc.at("status").get<std::string>());
    if (!status) throw SchemaViolation("/status", "unknown parse status");
    r.status = *status;
    r.error = doc.value("error", "");
    if (doc.contains("usage")) {
      const json& u = doc["usage"];
      r.usage = {u.value("prompt_tokens", 0L), u.value("completion_tokens", 0L), u.value("total_tokens", 0L)};
    }
    r.elapsed_seconds = doc.value("elapsed_seconds", 0.0);
    r.attempts = doc.value("attempts", 0);
  } catch (const json::exception& e) {
    throw SchemaViolation("/", std::string("malformed generation record: ") + e.what());
  }
  return r;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pmrkit
