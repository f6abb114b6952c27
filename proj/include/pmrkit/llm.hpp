#pragma once

// Prompt construction, chat-completion calls and model-text extraction.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmrkit/codecs.hpp"

namespace pmrkit {

struct PromptBundle {
  PmrId pmr = PmrId::bpmn;
  std::string system_text;
  /// Task description plus general modeling instructions; identical for every PMR.
  std::string shared_preamble;
  /// PMR-specific formatting rules with one example model.
  std::string format_section;
  /// shared_preamble + blank line + format_section.
  std::string user_text;
  /// Hex SHA-256 over system and user text.
  std::string fingerprint;
};

/// `PMRKIT_TEMPLATE_DIR` from the environment, else the directory configured at build time.
std::filesystem::path default_template_dir();

/// Throws std::invalid_argument for a blank description and ConfigError for a missing template.
PromptBundle build_prompt(std::string_view description, PmrId pmr, bool standardized,
                          const std::filesystem::path& template_dir = default_template_dir());

std::string sha256_hex(std::string_view data);

struct GenerationConfig {
  /// Base URL of an OpenAI-compatible API, e.g. "https://host/v1".
  std::string api_base;
  std::string api_key;
  std::string model;
  double temperature = 0.2;
  double top_p = 0.95;
  std::optional<int> top_k;
  int max_tokens = 4096;
  /// Total number of attempts per request.
  int retry_count = 3;
  std::chrono::milliseconds timeout{120000};
  /// Delay before the second attempt; doubles after each further failure.
  std::chrono::milliseconds backoff{1000};

  /// Throws ConfigError on out-of-range sampling parameters or a missing endpoint.
  void validate() const;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Carries one HTTP POST. Implementations throw TransportError when no reply arrives.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const std::string& url, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::milliseconds timeout) = 0;
};

/// Plain HTTP(S) transport.
class HttpTransport : public Transport {
 public:
  HttpReply post(const std::string& url, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>& headers,
                 std::chrono::milliseconds timeout) override;
};

enum class ParseStatus { ok, extraction_failed, parse_failed };
std::string_view to_string(ParseStatus status);
std::optional<ParseStatus> parse_status_from_string(std::string_view text);

struct TokenUsage {
  long prompt = 0;
  long completion = 0;
  long total = 0;
  bool operator==(const TokenUsage&) const = default;
};

struct GenerationRecord {
  std::string case_id;
  PmrId pmr = PmrId::bpmn;
  std::string model;
  std::string prompt_fingerprint;
  /// Assistant message content, verbatim.
  std::string raw_response;
  /// Present iff extraction succeeded.
  std::optional<std::string> extracted_text;
  ParseStatus status = ParseStatus::extraction_failed;
  std::string error;
  TokenUsage usage;
  double elapsed_seconds = 0.0;
  int attempts = 0;

  bool operator==(const GenerationRecord&) const = default;
};

/// Sends one chat request, retrying transport failures, 429 and 5xx replies. Throws
/// TransportError or ApiError once attempts are exhausted, ApiError immediately for other
/// non-2xx replies and ProtocolError for a malformed success payload.
GenerationRecord generate(const PromptBundle& bundle, const GenerationConfig& config, Transport& transport,
                          std::string case_id = {});
GenerationRecord generate(const PromptBundle& bundle, const GenerationConfig& config, std::string case_id = {});

/// Last fenced code block, else the span starting at the PMR's grammar anchor; trimmed.
/// Throws ExtractionError when neither exists.
std::string extract_model_text(std::string_view raw, PmrId pmr);

std::string record_to_json(const GenerationRecord& record);
/// Throws ParseError or SchemaViolation.
GenerationRecord record_from_json(std::string_view text);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace pmrkit
