#include <gtest/gtest.h>

#include <httplib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pmrkit/errors.hpp"
#include "pmrkit/metrics.hpp"
#include "support/generators.hpp"

namespace pmrkit {
namespace {

using testing::Rng;

// ---------------------------------------------------------------------------
// Lengths

TEST(LengthStats, EmptyTextIsAllZero) {
  EXPECT_EQ(length_stats("", Tokenizer::heuristic()), LengthStats{});
}

TEST(LengthStats, CountsLinesWordsChars) {
  LengthStats s = length_stats("a b\nc", Tokenizer::heuristic());
  EXPECT_EQ(s.lines, 2);
  EXPECT_EQ(s.words, 3);
  EXPECT_EQ(s.chars, 5);
  EXPECT_EQ(length_stats("x\n", Tokenizer::heuristic()).lines, 1);
  EXPECT_EQ(length_stats("\n\n", Tokenizer::heuristic()).lines, 2);
  EXPECT_EQ(length_stats("Größe", Tokenizer::heuristic()).chars, 5);
}

LengthStats naive_scan(const std::string& text) {
  LengthStats s;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) ++s.lines;
  std::istringstream words(text);
  std::string w;
  while (words >> w) ++s.words;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    i += c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    ++s.chars;
  }
  return s;
}

TEST(LengthStats, AgreesWithNaiveScanner) {
  Rng rng(5);
  const std::vector<std::string> pieces = {"a", "bc", " ", "  ", "\n", "\t", "é", "€", "😀", "<x/>", "\r\n", "\v"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int n = rng.uniform(0, 20);
    for (int k = 0; k < n; ++k) text += rng.pick(pieces);
    LengthStats expected = naive_scan(text);
    LengthStats got = length_stats(text, Tokenizer::heuristic());
    ASSERT_EQ(got.lines, expected.lines) << text;
    ASSERT_EQ(got.words, expected.words) << text;
    ASSERT_EQ(got.chars, expected.chars) << text;
    ASSERT_GE(got.tokens, 0);
  }
}

TEST(Tokenizer, HeuristicIsMonotoneUnderConcatenation) {
  Tokenizer t = Tokenizer::heuristic();
  EXPECT_EQ(t.count(""), 0u);
  EXPECT_EQ(t.count("task"), 1u);
  EXPECT_EQ(t.count("<task id=\"a\"/>"), t.count("<task") + t.count(" id=\"a\"/>"));
}

TEST(Tokenizer, UnreadableMergeTableIsConfigError) {
  EXPECT_THROW(Tokenizer::load({TokenizerSpec::Kind::bpe, "/nonexistent/merges.txt"}), ConfigError);
}

TEST(Tokenizer, AppliesMergesByPriority) {
  const auto path = std::filesystem::temp_directory_path() / "pmrkit_merges.txt";
  {
    std::ofstream out(path);
    out << "#version: 0.2\nt a\nta s\ntas k\n";
  }
  Tokenizer t = Tokenizer::load({TokenizerSpec::Kind::bpe, path.string()});
  EXPECT_EQ(t.count("task"), 1u);
  EXPECT_EQ(t.count("tasks"), 2u);
  EXPECT_EQ(t.count("kat"), 3u);
  EXPECT_EQ(t.description(), "bpe:" + path.string());
  {
    std::ofstream out(path);
    out << "just-one-field\n";
  }
  EXPECT_THROW(Tokenizer::load({TokenizerSpec::Kind::bpe, path.string()}), ConfigError);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// Coverage and deltas

TEST(Coverage, BpmnRepresentsEverything) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    ProcessModel m = testing::random_model(rng);
    CoverageReport r = element_coverage(m, PmrId::bpmn);
    EXPECT_EQ(r.representable, r.total);
    EXPECT_EQ(r.ratio, 1.0);
  }
}

ProcessModel ten_elements_two_conditions() {
  ProcessModel m;
  m.nodes = {Node::event("s", EventPosition::start), Node::gateway("x", GatewayType::exclusive), Node::task("b", "B"),
             Node::task("c", "C")};
  m.sequence_flows = {{"f1", "s", "x", {}}, {"f2", "x", "b", "yes"}, {"f3", "x", "c", "no"}, {"f4", "b", "c", {}}};
  return m;
}

TEST(Coverage, ConditionsAreNotRepresentableInPowl) {
  CoverageReport r = element_coverage(ten_elements_two_conditions(), PmrId::powl_code);
  EXPECT_EQ(r.total, 10);
  EXPECT_EQ(r.representable, 8);
  EXPECT_DOUBLE_EQ(r.ratio, 0.8);
  EXPECT_EQ(r.ratio_text(), "0.8000");
  EXPECT_EQ(element_coverage(ProcessModel{}, PmrId::powl_code).ratio_text(), "1.0000");
}

TEST(Coverage, RepresentableNeverExceedsTotal) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    ProcessModel m = testing::random_model(rng);
    for (PmrId p : kAllPmrs) {
      CoverageReport r = element_coverage(m, p);
      ASSERT_LE(r.representable, r.total);
      ASSERT_GE(r.ratio, 0.0);
      ASSERT_LE(r.ratio, 1.0);
    }
  }
}

TEST(CountDelta, IdentityAndSubtraction) {
  ProcessModel gold = ten_elements_two_conditions();
  EXPECT_EQ(element_count_delta(gold, gold), ElementCounts{});

  ProcessModel four;
  for (int k = 0; k < 4; ++k) four.nodes.push_back(Node::gateway("g" + std::to_string(k), GatewayType::exclusive));
  ProcessModel two = four;
  two.nodes.resize(2);
  EXPECT_EQ(element_count_delta(two, four)[ElementType::exclusive_gateway], -2);
}

TEST(CountDelta, RemovingGatewaysLowersNodesExactly) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    ProcessModel gold = testing::random_model(rng);
    std::set<std::string> gateways;
    for (const Node& n : gold.nodes)
      if (n.kind == NodeKind::gateway && gateways.size() < 3) gateways.insert(n.id);
    ProcessModel perturbed = bypass_nodes(gold, gateways);
    ElementCounts d = element_count_delta(perturbed, gold);
    EXPECT_EQ(d.nodes(), -static_cast<long>(gateways.size()));
    EXPECT_EQ(d.gateways(), -static_cast<long>(gateways.size()));
  }
}

// ---------------------------------------------------------------------------
// Matching

MatcherConfig with(MatchBackend backend, double threshold = 0.7) {
  MatcherConfig c;
  c.backend = backend;
  c.threshold = threshold;
  return c;
}

TEST(SemanticMatch, ExactBackendExamples) {
  EXPECT_EQ(semantic_match({"approve order"}, {"approve order"}, with(MatchBackend::exact)),
            (std::vector<Match>{{0, 0, 1.0}}));
  EXPECT_TRUE(semantic_match({"a"}, {"b"}, with(MatchBackend::exact)).empty());
}

TEST(SemanticMatch, ThresholdOutsideUnitIntervalIsRejected) {
  EXPECT_THROW(semantic_match({"a"}, {"a"}, with(MatchBackend::exact, 1.5)), ConfigError);
  EXPECT_THROW(semantic_match({"a"}, {"a"}, with(MatchBackend::exact, -0.1)), ConfigError);
}

TEST(SemanticMatch, LexicalConflatesInflections) {
  EXPECT_DOUBLE_EQ(lexical_similarity("Approve orders", "approving order"), 1.0);
  EXPECT_DOUBLE_EQ(lexical_similarity("check invoice", "check stock"), 0.5);
  EXPECT_DOUBLE_EQ(lexical_similarity("", ""), 1.0);
  EXPECT_DOUBLE_EQ(lexical_similarity("a", ""), 0.0);
}

const std::vector<std::string> kWords = {"check", "order", "send", "invoice", "approve", "ship", "goods", "stock"};

std::vector<std::string> random_phrases(Rng& rng, int max_len) {
  std::vector<std::string> out(static_cast<std::size_t>(rng.uniform(0, max_len)));
  for (std::string& s : out) {
    const int words = rng.uniform(1, 3);
    for (int w = 0; w < words; ++w) s += (w ? " " : "") + rng.pick(kWords);
  }
  return out;
}

TEST(SemanticMatch, GreedyResultIsOneToOneAndMaximal) {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    auto xs = random_phrases(rng, 6), ys = random_phrases(rng, 6);
    const double theta = rng.pick(std::vector<double>{0.0, 0.3, 0.5, 0.7, 1.0});
    auto matches = semantic_match(xs, ys, with(MatchBackend::lexical, theta));
    std::set<std::size_t> is, js;
    for (const Match& m : matches) {
      ASSERT_TRUE(is.insert(m.i).second);
      ASSERT_TRUE(js.insert(m.j).second);
      ASSERT_GE(m.similarity, theta);
      ASSERT_DOUBLE_EQ(m.similarity, lexical_similarity(xs[m.i], ys[m.j]));
    }
    // Brute force: no unmatched pair above the threshold survives.
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ys.size(); ++j)
        if (!is.count(i) && !js.count(j)) ASSERT_LT(lexical_similarity(xs[i], ys[j]), theta);
  }
}

TEST(SemanticMatch, IsDeterministic) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    auto xs = random_phrases(rng, 8), ys = random_phrases(rng, 8);
    EXPECT_EQ(semantic_match(xs, ys, with(MatchBackend::lexical)), semantic_match(xs, ys, with(MatchBackend::lexical)));
  }
}

// ---------------------------------------------------------------------------
// PME similarity

PmeBundle tasks_only(const std::vector<std::string>& labels) {
  PmeBundle b;
  for (std::size_t k = 0; k < labels.size(); ++k) b.tasks.push_back({"t" + std::to_string(k), labels[k], {}, {}});
  return b;
}

TEST(PmeSimilarity, DirectFormulaExamples) {
  EXPECT_DOUBLE_EQ(dice(2, 2, 3), 0.8);
  EXPECT_DOUBLE_EQ(dice(0, 0, 0), 1.0);
  SimilarityReport r =
      pme_similarity(tasks_only({"a", "b"}), tasks_only({"a", "b", "c"}), with(MatchBackend::exact));
  EXPECT_DOUBLE_EQ(r.tasks.dsc, 0.8);
  EXPECT_DOUBLE_EQ(pme_similarity(tasks_only({"a", "b"}), tasks_only({"c"}), with(MatchBackend::exact)).tasks.dsc, 0.0);
  EXPECT_DOUBLE_EQ(pme_similarity(PmeBundle{}, PmeBundle{}, with(MatchBackend::exact)).overall.dsc, 1.0);
  EXPECT_DOUBLE_EQ(pme_similarity(PmeBundle{}, tasks_only({"a"}), with(MatchBackend::exact)).overall.dsc, 0.0);
}

TEST(PmeSimilarity, IdentityScoresOne) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    PmeBundle b = to_pme(testing::random_model(rng));
    for (MatchBackend backend : {MatchBackend::exact, MatchBackend::lexical}) {
      SimilarityReport r = pme_similarity(b, b, with(backend));
      for (std::string_view c : kSimilarityCategories) ASSERT_DOUBLE_EQ(category(r, c).dsc, 1.0) << c;
    }
  }
}

TEST(PmeSimilarity, ExactTasksMatchNaiveIntersection) {
  Rng rng(32);
  std::vector<std::string> pool;
  for (int k = 0; k < 12; ++k) pool.push_back("label " + std::to_string(k));
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> a = pool, b = pool;
    rng.shuffle(a);
    rng.shuffle(b);
    a.resize(static_cast<std::size_t>(rng.uniform(0, 8)));
    b.resize(static_cast<std::size_t>(rng.uniform(0, 8)));
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end()), common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(common, common.end()));
    const double expected = sa.empty() && sb.empty() ? 1.0 : 2.0 * common.size() / (sa.size() + sb.size());
    EXPECT_NEAR(pme_similarity(tasks_only(a), tasks_only(b), with(MatchBackend::exact)).tasks.dsc, expected, 1e-12);
  }
}

TEST(PmeSimilarity, ScoresAreSymmetricAndBounded) {
  Rng rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    PmeBundle a = to_pme(testing::random_model(rng)), b = to_pme(testing::random_model(rng));
    for (MatchBackend backend : {MatchBackend::exact, MatchBackend::lexical}) {
      SimilarityReport ab = pme_similarity(a, b, with(backend)), ba = pme_similarity(b, a, with(backend));
      for (std::string_view c : kSimilarityCategories) {
        ASSERT_DOUBLE_EQ(category(ab, c).dsc, category(ba, c).dsc) << c << " trial " << trial;
        ASSERT_GE(category(ab, c).dsc, 0.0);
        ASSERT_LE(category(ab, c).dsc, 1.0);
      }
    }
  }
}

TEST(PmeSimilarity, FlowsNeedMatchedEndpointsAndConditions) {
  PmeBundle gold;
  gold.tasks = {{"a", "A", {}, {}}, {"b", "B", {}, {}}, {"c", "C", {}, {}}};
  gold.sequence_flows = {{"a", "b", "ok"}, {"b", "c", {}}};
  PmeBundle gen = gold;
  gen.sequence_flows = {{"a", "b", "ok"}, {"b", "c", "late"}};
  SimilarityReport r = pme_similarity(gen, gold, with(MatchBackend::exact));
  EXPECT_EQ(r.sequence_flows.matches, 1u);
  gen.tasks[2].label = "Z";
  gen.sequence_flows = gold.sequence_flows;
  r = pme_similarity(gen, gold, with(MatchBackend::exact));
  EXPECT_EQ(r.sequence_flows.matches, 1u);
  EXPECT_DOUBLE_EQ(r.overall.dsc, 2.0 * 3 / 10);
}

TEST(PmeSimilarity, GatewaySubscores) {
  PmeBundle gold, gen;
  gold.gateways = {{"g1", GatewayType::exclusive, "Approved?", {}, {}}, {"g2", GatewayType::parallel, {}, {}, {}}};
  gen.gateways = {{"h1", GatewayType::exclusive, "Approved?", {}, {}}, {"h2", GatewayType::exclusive, {}, {}, {}}};
  SimilarityReport r = pme_similarity(gen, gold, with(MatchBackend::exact));
  EXPECT_DOUBLE_EQ(r.gateway_types.dsc, 0.5);
  EXPECT_DOUBLE_EQ(r.gateway_decisions.dsc, 1.0);
  EXPECT_DOUBLE_EQ(r.gateways.dsc, 0.5);
}

// ---------------------------------------------------------------------------
// Embedding backend against a local server

class EmbeddingServer {
 public:
  explicit EmbeddingServer(bool ragged = false) {
    server_.Post("/embed", [this, ragged](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      auto texts = nlohmann::json::parse(req.body);
      nlohmann::json out = nlohmann::json::array();
      std::size_t k = 0;
      for (const auto& t : texts) {
        // Letter histogram: texts with the same letters are identical vectors.
        std::vector<double> v(ragged && k++ % 2 ? 3 : 26, 0.0);
        for (char c : t.get<std::string>())
          if (c >= 'a' && c <= 'z' && static_cast<std::size_t>(c - 'a') < v.size()) v[static_cast<std::size_t>(c - 'a')] += 1;
        out.push_back(v);
      }
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~EmbeddingServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }
  const std::string& last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::string last_auth_;
};

TEST(EmbeddingBackend, CosineOverServiceVectors) {
  EmbeddingServer server;
  MatcherConfig cfg = with(MatchBackend::embedding);
  cfg.embedding_url = server.url();
  cfg.embedding_token = "secret";
  cfg.batch_size = 2;
  auto matches = semantic_match({"stop", "abc", "zzz"}, {"tops", "cab", "q"}, cfg);
  ASSERT_EQ(matches.size(), 2u);
  EXPECT_NEAR(matches[0].similarity, 1.0, 1e-12);
  EXPECT_NEAR(matches[1].similarity, 1.0, 1e-12);
  EXPECT_EQ(server.last_auth(), "Bearer secret");
}

TEST(EmbeddingBackend, DimensionMismatchIsProtocolError) {
  EmbeddingServer server(true);
  MatcherConfig cfg = with(MatchBackend::embedding);
  cfg.embedding_url = server.url();
  EXPECT_THROW(semantic_match({"a", "b"}, {"c"}, cfg), ProtocolError);
}

TEST(EmbeddingBackend, UnreachableEndpointIsTransportError) {
  MatcherConfig cfg = with(MatchBackend::embedding);
  cfg.embedding_url = "http://127.0.0.1:1/embed";
  cfg.timeout = std::chrono::milliseconds(500);
  try {
    semantic_match({"a"}, {"b"}, cfg);
    FAIL() << "expected a transport error";
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("127.0.0.1:1/embed"), std::string::npos);
  }
}

}  // namespace
}  // namespace pmrkit
