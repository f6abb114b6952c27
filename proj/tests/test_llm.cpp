#include <gtest/gtest.h>

#include <httplib.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "pmrkit/errors.hpp"
#include "pmrkit/llm.hpp"

namespace pmrkit {
namespace {

const char* kDescription = "A clerk receives a claim, checks it and either pays or rejects it.";

TEST(BuildPrompt, SharedPreambleIsIdenticalAcrossPmrs) {
  const PromptBundle first = build_prompt(kDescription, PmrId::bpmn, true);
  std::set<std::string> sections;
  for (PmrId p : kAllPmrs) {
    PromptBundle b = build_prompt(kDescription, p, true);
    EXPECT_EQ(b.shared_preamble, first.shared_preamble);
    EXPECT_EQ(b.user_text.rfind(b.shared_preamble, 0), 0u);
    EXPECT_EQ(b.system_text, first.system_text);
    sections.insert(b.format_section);
  }
  EXPECT_EQ(sections.size(), kAllPmrs.size());
  EXPECT_NE(first.shared_preamble.find(kDescription), std::string::npos);
}

TEST(BuildPrompt, IsDeterministic) {
  for (PmrId p : kAllPmrs) {
    EXPECT_EQ(build_prompt(kDescription, p, true).fingerprint, build_prompt(kDescription, p, true).fingerprint);
    EXPECT_NE(build_prompt(kDescription, p, true).fingerprint, build_prompt(kDescription, p, false).fingerprint);
  }
  EXPECT_EQ(build_prompt(kDescription, PmrId::mermaid, true).fingerprint.size(), 64u);
}

TEST(BuildPrompt, StandardizedPromptOmitsSwimlanes) {
  const PromptBundle b = build_prompt(kDescription, PmrId::graphviz, true);
  for (const char* word : {"pool", "lane", "swimlane", "message flow"})
    EXPECT_EQ(b.shared_preamble.find(word), std::string::npos) << word;
  EXPECT_NE(build_prompt(kDescription, PmrId::graphviz, false).shared_preamble.find("pool"), std::string::npos);
}

TEST(BuildPrompt, EachFormatSectionHoldsOneDecodableExample) {
  for (PmrId p : kAllPmrs) {
    const PromptBundle b = build_prompt(kDescription, p, true);
    std::size_t fences = 0;
    for (std::size_t at = 0; (at = b.format_section.find("```", at)) != std::string::npos; at += 3) ++fences;
    EXPECT_EQ(fences, 2u) << to_string(p);
    const std::string example = extract_model_text(b.format_section, p);
    EXPECT_NO_THROW(decode(example, p, {true})) << to_string(p);
  }
}

TEST(BuildPrompt, RejectsBlankDescriptionAndMissingTemplates) {
  EXPECT_THROW(build_prompt("", PmrId::mermaid, true), std::invalid_argument);
  EXPECT_THROW(build_prompt(" \n\t", PmrId::mermaid, true), std::invalid_argument);
  EXPECT_THROW(build_prompt(kDescription, PmrId::mermaid, true, "/nonexistent/templates"), ConfigError);
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// ---------------------------------------------------------------------------
// Extraction

TEST(Extract, LastFencedBlockWins) {
  EXPECT_EQ(extract_model_text("Here is the model:\n```mermaid\nflowchart TD\n    a --> b\n```\nDone.", PmrId::mermaid),
            "flowchart TD\n    a --> b");
  EXPECT_EQ(extract_model_text("```\nfirst\n```\ntext\n~~~dot\ndigraph { a -> b }\n~~~\n", PmrId::graphviz),
            "digraph { a -> b }");
  EXPECT_EQ(extract_model_text("```json\n[{\"type\": \"task\"}]", PmrId::json_branches), "[{\"type\": \"task\"}]");
}

TEST(Extract, AnchorRegionWithoutFences) {
  EXPECT_EQ(extract_model_text("Sure! digraph follows.\ndigraph p {\n  a -> b;\n}\nHope this helps.", PmrId::graphviz),
            "digraph p {\n  a -> b;\n}");
  EXPECT_EQ(extract_model_text("The answer: [1, 2] is it. Bye", PmrId::json_branches), "[1, 2]");
  EXPECT_EQ(extract_model_text("Model:\n<process id=\"p\"><task id=\"a\"/></process>\nthanks", PmrId::simplified_xml),
            "<process id=\"p\"><task id=\"a\"/></process>");
  EXPECT_EQ(extract_model_text("Code:\nimport pm4py\na = activity(\"x\")\nfinal_model = a", PmrId::powl_code),
            "import pm4py\na = activity(\"x\")\nfinal_model = a");
}

TEST(Extract, PureProseIsAnExtractionError) {
  for (PmrId p : kAllPmrs)
    EXPECT_THROW(extract_model_text("I am unable to produce this model, sorry.", p), ExtractionError) << to_string(p);
  EXPECT_THROW(extract_model_text("", PmrId::mermaid), ExtractionError);
}

// ---------------------------------------------------------------------------
// Chat client with a scripted transport

class ScriptedTransport : public Transport {
 public:
  struct Step {
    int status;  // 0 = transport failure
    std::string body;
  };
  explicit ScriptedTransport(std::deque<Step> steps) : steps_(std::move(steps)) {}

  HttpReply post(const std::string& url, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>& headers,
                 std::chrono::milliseconds) override {
    ++calls;
    last_url = url;
    last_body = body;
    last_headers = headers;
    Step s = steps_.size() > 1 ? steps_.front() : steps_.back();
    if (steps_.size() > 1) steps_.pop_front();
    if (s.status == 0) throw TransportError("timed out talking to " + url);
    return {s.status, s.body};
  }

  int calls = 0;
  std::string last_url, last_body;
  std::vector<std::pair<std::string, std::string>> last_headers;

 private:
  std::deque<Step> steps_;
};

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                        {"usage", {{"prompt_tokens", 100}, {"completion_tokens", 20}, {"total_tokens", 120}}}}
      .dump();
}

GenerationConfig test_config() {
  GenerationConfig c;
  c.api_base = "http://llm.invalid/v1/";
  c.api_key = "k";
  c.model = "test-model";
  c.backoff = std::chrono::milliseconds(1);
  return c;
}

const std::string kMermaidReply = "Here you go:\n```mermaid\nflowchart TD\n    s((start)) --> a[Do work]\n    a --> e(((done)))\n```";

TEST(Generate, RecordsVerbatimResponseAndParseStatus) {
  ScriptedTransport t({{200, completion(kMermaidReply)}});
  const PromptBundle b = build_prompt(kDescription, PmrId::mermaid, true);
  GenerationRecord r = generate(b, test_config(), t, "case_1");
  EXPECT_EQ(r.raw_response, kMermaidReply);
  EXPECT_EQ(r.status, ParseStatus::ok) << r.error;
  ASSERT_TRUE(r.extracted_text);
  EXPECT_EQ(r.extracted_text->rfind("flowchart TD", 0), 0u);
  EXPECT_EQ(r.usage, (TokenUsage{100, 20, 120}));
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(r.case_id, "case_1");
  EXPECT_EQ(r.prompt_fingerprint, b.fingerprint);
  EXPECT_EQ(t.last_url, "http://llm.invalid/v1/chat/completions");

  auto req = nlohmann::json::parse(t.last_body);
  EXPECT_EQ(req["model"], "test-model");
  EXPECT_DOUBLE_EQ(req["temperature"].get<double>(), 0.2);
  EXPECT_DOUBLE_EQ(req["top_p"].get<double>(), 0.95);
  EXPECT_FALSE(req.contains("top_k"));
  EXPECT_EQ(req["messages"][1]["content"], b.user_text);
  EXPECT_EQ(t.last_headers.at(0), (std::pair<std::string, std::string>{"Authorization", "Bearer k"}));
}

TEST(Generate, RetriesAfterRateLimit) {
  ScriptedTransport t({{429, "slow down"}, {200, completion(kMermaidReply)}});
  GenerationRecord r = generate(build_prompt(kDescription, PmrId::mermaid, true), test_config(), t);
  EXPECT_EQ(t.calls, 2);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(r.status, ParseStatus::ok);
}

TEST(Generate, TransportErrorAfterAllAttempts) {
  ScriptedTransport t({{0, ""}});
  GenerationConfig c = test_config();
  c.retry_count = 4;
  EXPECT_THROW(generate(build_prompt(kDescription, PmrId::mermaid, true), c, t), TransportError);
  EXPECT_EQ(t.calls, 4);
}

TEST(Generate, ClientErrorsAreNotRetried) {
  ScriptedTransport t({{401, "{\"error\": \"bad key\"}"}});
  try {
    generate(build_prompt(kDescription, PmrId::mermaid, true), test_config(), t);
    FAIL() << "expected ApiError";
  } catch (const ApiError& e) {
    EXPECT_EQ(e.status(), 401);
    EXPECT_NE(e.body_excerpt().find("bad key"), std::string::npos);
  }
  EXPECT_EQ(t.calls, 1);
}

TEST(Generate, ServerErrorsExhaustIntoApiError) {
  ScriptedTransport t({{503, "busy"}});
  EXPECT_THROW(generate(build_prompt(kDescription, PmrId::mermaid, true), test_config(), t), ApiError);
  EXPECT_EQ(t.calls, 3);
}

TEST(Generate, MalformedPayloadIsProtocolError) {
  ScriptedTransport t({{200, "{\"choices\": []}"}});
  EXPECT_THROW(generate(build_prompt(kDescription, PmrId::mermaid, true), test_config(), t), ProtocolError);
  ScriptedTransport u({{200, "<html>"}});
  EXPECT_THROW(generate(build_prompt(kDescription, PmrId::mermaid, true), test_config(), u), ProtocolError);
}

TEST(Generate, UnusableAnswersAreRecordedNotThrown) {
  ScriptedTransport prose({{200, completion("I cannot help with that.")}});
  GenerationRecord r = generate(build_prompt(kDescription, PmrId::graphviz, true), test_config(), prose);
  EXPECT_EQ(r.status, ParseStatus::extraction_failed);
  EXPECT_FALSE(r.extracted_text);

  ScriptedTransport broken({{200, completion("```python\nfinal_model = mystery(1)\n```")}});
  r = generate(build_prompt(kDescription, PmrId::powl_code, true), test_config(), broken);
  EXPECT_EQ(r.status, ParseStatus::parse_failed);
  EXPECT_TRUE(r.extracted_text);
  EXPECT_FALSE(r.error.empty());
}

TEST(Generate, RejectsInvalidSamplingParameters) {
  ScriptedTransport t({{200, completion(kMermaidReply)}});
  const PromptBundle b = build_prompt(kDescription, PmrId::mermaid, true);
  GenerationConfig c = test_config();
  c.top_p = 0.0;
  EXPECT_THROW(generate(b, c, t), ConfigError);
  c = test_config();
  c.temperature = -1;
  EXPECT_THROW(generate(b, c, t), ConfigError);
  EXPECT_EQ(t.calls, 0);
}

TEST(Generate, OverRealHttp) {
  httplib::Server server;
  int hits = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 429;
      return;
    }
    EXPECT_EQ(req.get_header_value("Authorization"), "Bearer k");
    res.set_content(completion(kMermaidReply), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  GenerationConfig c = test_config();
  c.api_base = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  GenerationRecord r = generate(build_prompt(kDescription, PmrId::mermaid, true), c);
  server.stop();
  th.join();
  EXPECT_EQ(hits, 2);
  EXPECT_EQ(r.status, ParseStatus::ok);
}

// ---------------------------------------------------------------------------
// Records

TEST(Records, JsonRoundTripAndAtomicWrite) {
  GenerationRecord r;
  r.case_id = "c7";
  r.pmr = PmrId::pme;
  r.model = "m";
  r.prompt_fingerprint = "ff";
  r.raw_response = "```json\n{\"tasks\": []}\n```\n\"quoted\" \\ and ü";
  r.extracted_text = "{\"tasks\": []}";
  r.status = ParseStatus::parse_failed;
  r.error = "schema";
  r.usage = {1, 2, 3};
  r.elapsed_seconds = 0.5;
  r.attempts = 2;
  EXPECT_EQ(record_from_json(record_to_json(r)), r);

  const auto dir = std::filesystem::temp_directory_path() / "pmrkit_records_test";
  std::filesystem::remove_all(dir);
  write_file_atomic(dir / "c7" / "pme.json", record_to_json(r));
  std::ifstream in(dir / "c7" / "pme.json");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(record_from_json(text), r);
  EXPECT_FALSE(std::filesystem::exists(dir / "c7" / "pme.json.tmp"));
  std::filesystem::remove_all(dir);

  EXPECT_THROW(record_from_json("not json"), ParseError);
  EXPECT_THROW(record_from_json("{\"case_id\": 1}"), SchemaViolation);
}

}  // namespace
}  // namespace pmrkit
