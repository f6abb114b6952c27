#include "pmrkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "http.hpp"
#include "pmrkit/errors.hpp"

namespace pmrkit {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }
bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }
// Bytes of multi-byte scalars count as word characters.
bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

std::size_t scalar_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return !is_continuation(c); }));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tokenizers

struct Tokenizer::Merges {
  std::unordered_map<std::string, std::size_t> rank;  // "left right" -> priority
  std::vector<std::string> byte_symbol;                // byte value -> printable symbol
};

namespace {

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

// The printable byte alphabet used by byte-level merge tables.
std::vector<std::string> byte_alphabet() {
  std::vector<std::string> out(256);
  char32_t extra = 256;
  for (int b = 0; b < 256; ++b) {
    const bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174 && b <= 255);
    out[static_cast<std::size_t>(b)] = encode_utf8(printable ? static_cast<char32_t>(b) : extra++);
  }
  return out;
}

enum class CharClass { space, word, digit, other };

CharClass classify(unsigned char c) {
  if (is_space(c)) return CharClass::space;
  if (std::isdigit(c)) return CharClass::digit;
  if (is_word_byte(c)) return CharClass::word;
  return CharClass::other;
}

// Splits text into pre-token chunks: an optional single leading space followed by a run of one
// class; other whitespace runs stand alone.
std::vector<std::string_view> pre_tokenize(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    auto c = static_cast<unsigned char>(text[i]);
    if (c == ' ' && i + 1 < text.size() && classify(static_cast<unsigned char>(text[i + 1])) != CharClass::space) {
      c = static_cast<unsigned char>(text[++i]);
    }
    const CharClass cls = classify(c);
    while (i < text.size() && classify(static_cast<unsigned char>(text[i])) == cls) ++i;
    chunks.push_back(text.substr(start, i - start));
  }
  return chunks;
}

std::size_t heuristic_count(std::string_view text) {
  std::size_t tokens = 0;
  for (std::string_view chunk : pre_tokenize(text)) {
    std::string_view body = chunk;
    if (body.size() > 1 && body.front() == ' ') body.remove_prefix(1);
    switch (classify(static_cast<unsigned char>(body.front()))) {
      case CharClass::space: tokens += 1; break;
      case CharClass::word: tokens += (scalar_count(body) + 3) / 4; break;
      case CharClass::digit: tokens += (body.size() + 2) / 3; break;
      case CharClass::other: tokens += body.size(); break;
    }
  }
  return tokens;
}

}  // namespace

Tokenizer Tokenizer::load(const TokenizerSpec& spec) {
  Tokenizer t;
  t.spec_ = spec;
  if (spec.kind == TokenizerSpec::Kind::heuristic) return t;

  std::ifstream in(spec.merges_path);
  if (!in) throw ConfigError("cannot read tokenizer merge table '" + spec.merges_path + "'");
  auto merges = std::make_shared<Merges>();
  merges->byte_symbol = byte_alphabet();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("#version", 0) == 0) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == line.size() ||
        line.find(' ', space + 1) != std::string::npos)
      throw ConfigError("malformed merge on line " + std::to_string(line_no) + " of '" + spec.merges_path + "'");
    merges->rank.emplace(line, merges->rank.size());
  }
  if (merges->rank.empty()) throw ConfigError("tokenizer merge table '" + spec.merges_path + "' is empty");
  t.merges_ = std::move(merges);
  return t;
}

std::size_t Tokenizer::count(std::string_view text) const {
  if (!merges_) return heuristic_count(text);
  std::size_t tokens = 0;
  std::vector<std::string> symbols;
  for (std::string_view chunk : pre_tokenize(text)) {
    symbols.clear();
    for (unsigned char b : chunk) symbols.push_back(merges_->byte_symbol[b]);
    while (symbols.size() > 1) {
      std::size_t best = std::numeric_limits<std::size_t>::max(), at = 0;
      for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
        auto it = merges_->rank.find(symbols[k] + ' ' + symbols[k + 1]);
        if (it != merges_->rank.end() && it->second < best) best = it->second, at = k;
      }
      if (best == std::numeric_limits<std::size_t>::max()) break;
      symbols[at] += symbols[at + 1];
      symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    }
    tokens += symbols.size();
  }
  return tokens;
}

std::string Tokenizer::description() const {
  if (!merges_) return "heuristic";
  return "bpe:" + spec_.merges_path;
}

LengthStats length_stats(std::string_view text, const Tokenizer& tokenizer) {
  LengthStats s;
  s.lines = static_cast<long>(std::count(text.begin(), text.end(), '\n'));
  if (!text.empty() && text.back() != '\n') ++s.lines;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = is_space(c);
    if (!space && !in_word) ++s.words;
    in_word = !space;
  }
  s.chars = static_cast<long>(scalar_count(text));
  s.tokens = static_cast<long>(tokenizer.count(text));
  return s;
}

// ---------------------------------------------------------------------------
// Coverage and counts

std::string CoverageReport::ratio_text() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", ratio);
  return buf;
}

CoverageReport element_coverage(const ProcessModel& model, PmrId pmr) {
  const ElementCounts counts = count_elements(model);
  const ElementTypeSet& supported = capabilities(pmr).supported;
  CoverageReport r;
  r.pmr = pmr;
  r.total = counts.total();
  for (ElementType t : kAllElementTypes)
    if (supported.contains(t)) r.representable += counts[t];
  r.ratio = r.total == 0 ? 1.0 : static_cast<double>(r.representable) / static_cast<double>(r.total);
  return r;
}

ElementCounts element_count_delta(const ProcessModel& generated, const ProcessModel& gold) {
  return count_elements(generated) - count_elements(gold);
}

// ---------------------------------------------------------------------------
// Matching

std::string_view to_string(MatchBackend backend) {
  switch (backend) {
    case MatchBackend::exact: return "exact";
    case MatchBackend::lexical: return "lexical";
    case MatchBackend::embedding: return "embedding";
  }
  return "?";
}

std::optional<MatchBackend> match_backend_from_string(std::string_view text) {
  for (MatchBackend b : {MatchBackend::exact, MatchBackend::lexical, MatchBackend::embedding})
    if (to_string(b) == text) return b;
  return std::nullopt;
}

namespace {

bool is_vowel(const std::string& w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    case 'y': return i > 0 && !is_vowel(w, i - 1);
    default: return false;
  }
}

bool has_vowel(const std::string& w, std::size_t end) {
  for (std::size_t i = 0; i < end; ++i)
    if (is_vowel(w, i)) return true;
  return false;
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Plural and participle stripping; enough to conflate inflections of activity labels.
std::string stem(std::string w) {
  if (w.size() <= 3 || !std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) return w;
  if (ends_with(w, "sses") || ends_with(w, "ies")) {
    w.erase(w.size() - 2);
  } else if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us")) {
    w.pop_back();
  }
  if (ends_with(w, "eed")) {
    w.pop_back();
  } else {
    for (std::string_view suffix : {"ing", "ed"}) {
      if (ends_with(w, suffix) && has_vowel(w, w.size() - suffix.size()) && w.size() - suffix.size() >= 3) {
        w.erase(w.size() - suffix.size());
        if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
          w += 'e';
        } else if (w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] && !is_vowel(w, w.size() - 1) &&
                   w.back() != 'l' && w.back() != 's' && w.back() != 'z') {
          w.pop_back();
        }
        break;
      }
    }
  }
  if (w.size() > 2 && w.back() == 'y' && has_vowel(w, w.size() - 1)) w.back() = 'i';
  if (w.size() > 4 && w.back() == 'e') w.pop_back();
  return w;
}

}  // namespace

std::vector<std::string> lexical_terms(std::string_view text) {
  std::set<std::string> terms;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) terms.insert(stem(std::move(word)));
    word.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      word += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return {terms.begin(), terms.end()};
}

double lexical_similarity(std::string_view a, std::string_view b) {
  const auto ta = lexical_terms(a), tb = lexical_terms(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::vector<std::string> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  return dice(common.size(), ta.size(), tb.size());
}

std::vector<Match> greedy_match(const std::vector<std::vector<double>>& similarity,
                                const std::vector<std::string>& xs, const std::vector<std::string>& ys,
                                double threshold) {
  std::vector<Match> candidates;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      if (similarity[i][j] >= threshold) candidates.push_back({i, j, similarity[i][j]});
  std::sort(candidates.begin(), candidates.end(), [&](const Match& a, const Match& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (xs[a.i] != xs[b.i]) return xs[a.i] < xs[b.i];
    if (ys[a.j] != ys[b.j]) return ys[a.j] < ys[b.j];
    return std::pair(a.i, a.j) < std::pair(b.i, b.j);
  });
  std::vector<bool> x_used(xs.size()), y_used(ys.size());
  std::vector<Match> out;
  for (const Match& m : candidates) {
    if (x_used[m.i] || y_used[m.j]) continue;
    x_used[m.i] = y_used[m.j] = true;
    out.push_back(m);
  }
  return out;
}

Matcher::Matcher(MatcherConfig config) : config_(std::move(config)) {
  if (!(config_.threshold >= 0.0 && config_.threshold <= 1.0))
    throw ConfigError("matcher threshold must lie in [0,1]");
  if (config_.backend == MatchBackend::embedding && config_.embedding_url.empty())
    throw ConfigError("embedding backend needs an endpoint URL");
  if (config_.batch_size == 0) config_.batch_size = 1;
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
}

namespace {

std::vector<std::vector<double>> parse_embeddings(const std::string& body, const std::string& url) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError("embedding service " + url + " returned invalid JSON: " + e.what());
  }
  // Accepted shapes: [[...]], {"embeddings": [[...]]}, {"data": [{"embedding": [...]}]}.
  nlohmann::json rows;
  if (doc.is_array()) {
    rows = doc;
  } else if (doc.is_object() && doc.contains("embeddings")) {
    rows = doc["embeddings"];
  } else if (doc.is_object() && doc.contains("data") && doc["data"].is_array()) {
    rows = nlohmann::json::array();
    for (const auto& item : doc["data"]) {
      if (!item.is_object() || !item.contains("embedding")) throw ProtocolError("embedding item without 'embedding'");
      rows.push_back(item["embedding"]);
    }
  } else {
    throw ProtocolError("embedding service " + url + " returned an unrecognized payload");
  }
  if (!rows.is_array()) throw ProtocolError("embedding service " + url + " returned a non-array payload");
  std::vector<std::vector<double>> out;
  for (const auto& row : rows) {
    if (!row.is_array()) throw ProtocolError("embedding service " + url + " returned a non-vector row");
    std::vector<double> v;
    for (const auto& x : row) {
      if (!x.is_number()) throw ProtocolError("embedding service " + url + " returned a non-numeric component");
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> fetch_batch(const MatcherConfig& cfg, const std::vector<std::string>& texts) {
  detail::HttpHeaders headers;
  if (!cfg.embedding_token.empty()) headers.emplace_back("Authorization", "Bearer " + cfg.embedding_token);
  const nlohmann::json body = texts;
  const detail::HttpResponse r =
      detail::http_post(cfg.embedding_url, body.dump(), "application/json", headers, cfg.timeout);
  if (r.status < 200 || r.status >= 300) throw ApiError(r.status, r.body.substr(0, 200));
  auto rows = parse_embeddings(r.body, cfg.embedding_url);
  if (rows.size() != texts.size())
    throw ProtocolError("embedding service " + cfg.embedding_url + " returned " + std::to_string(rows.size()) +
                        " vectors for " + std::to_string(texts.size()) + " texts");
  return rows;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k], na += a[k] * a[k], nb += b[k] * b[k];
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace

void Matcher::embed_missing(const std::vector<std::string>& texts) {
  std::vector<std::string> missing;
  for (const std::string& t : std::set<std::string>(texts.begin(), texts.end()))
    if (!embeddings_.count(t)) missing.push_back(t);
  if (missing.empty()) return;

  std::vector<std::vector<std::string>> batches;
  for (std::size_t k = 0; k < missing.size(); k += config_.batch_size)
    batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(k),
                         missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), k + config_.batch_size)));
  std::vector<std::vector<std::vector<double>>> results(batches.size());
  for (std::size_t wave = 0; wave < batches.size(); wave += config_.max_in_flight) {
    std::vector<std::future<std::vector<std::vector<double>>>> pending;
    const std::size_t end = std::min(batches.size(), wave + config_.max_in_flight);
    for (std::size_t b = wave; b < end; ++b)
      pending.push_back(std::async(std::launch::async, fetch_batch, std::cref(config_), std::cref(batches[b])));
    for (std::size_t b = wave; b < end; ++b) results[b] = pending[b - wave].get();
  }

  std::size_t dim = embeddings_.empty() ? 0 : embeddings_.begin()->second.size();
  std::size_t k = 0;
  for (auto& batch : results) {
    for (auto& v : batch) {
      if (dim == 0) dim = v.size();
      if (v.size() != dim || v.empty())
        throw ProtocolError("embedding service " + config_.embedding_url + " returned vectors of dimension " +
                            std::to_string(v.size()) + " and " + std::to_string(dim));
      embeddings_[missing[k++]] = std::move(v);
    }
  }
}

std::vector<std::vector<double>> Matcher::similarity(const std::vector<std::string>& xs,
                                                     const std::vector<std::string>& ys) {
  std::vector<std::vector<double>> sim(xs.size(), std::vector<double>(ys.size(), 0.0));
  if (xs.empty() || ys.empty()) return sim;
  switch (config_.backend) {
    case MatchBackend::exact: {
      std::vector<std::string> nx, ny;
      for (const auto& x : xs) nx.push_back(normalize_label(x));
      for (const auto& y : ys) ny.push_back(normalize_label(y));
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) sim[i][j] = nx[i] == ny[j] ? 1.0 : 0.0;
      break;
    }
    case MatchBackend::lexical:
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) sim[i][j] = lexical_similarity(xs[i], ys[j]);
      break;
    case MatchBackend::embedding: {
      std::vector<std::string> all(xs);
      all.insert(all.end(), ys.begin(), ys.end());
      embed_missing(all);
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) sim[i][j] = cosine(embeddings_.at(xs[i]), embeddings_.at(ys[j]));
      break;
    }
  }
  return sim;
}

std::vector<Match> Matcher::match(const std::vector<std::string>& xs, const std::vector<std::string>& ys) {
  return greedy_match(similarity(xs, ys), xs, ys, config_.threshold);
}

std::vector<Match> semantic_match(const std::vector<std::string>& xs, const std::vector<std::string>& ys,
                                  const MatcherConfig& config) {
  Matcher m(config);
  return m.match(xs, ys);
}

// ---------------------------------------------------------------------------
// PME similarity

double dice(std::size_t matches, std::size_t a, std::size_t b) {
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(matches) / static_cast<double>(a + b);
}

namespace {

CategoryScore score(std::vector<Match> pairs, std::size_t generated, std::size_t gold) {
  CategoryScore s;
  s.matches = pairs.size();
  s.generated = generated;
  s.gold = gold;
  s.dsc = dice(s.matches, generated, gold);
  s.pairs = std::move(pairs);
  return s;
}

std::string with_label(std::string head, const std::optional<std::string>& label) {
  if (label) head += ": " + *label;
  return head;
}

struct Rendered {
  std::vector<std::string> tasks, events, gateways, decisions, types;
  std::vector<std::string> task_ids, event_ids, gateway_ids;

  explicit Rendered(const PmeBundle& b) {
    for (const PmeTask& t : b.tasks) {
      tasks.push_back(t.label.value_or(""));
      task_ids.push_back(t.id);
    }
    for (const PmeEvent& e : b.events) {
      events.push_back(with_label(std::string(to_string(e.position)) + " event", e.label));
      event_ids.push_back(e.id);
    }
    for (const PmeGateway& g : b.gateways) {
      gateways.push_back(with_label(std::string(to_string(g.type)) + " gateway", g.decision));
      gateway_ids.push_back(g.id);
      types.emplace_back(to_string(g.type));
      if (g.decision) decisions.push_back(*g.decision);
    }
  }
};

}  // namespace

const CategoryScore& category(const SimilarityReport& report, std::string_view name) {
  if (name == "overall") return report.overall;
  if (name == "tasks") return report.tasks;
  if (name == "events") return report.events;
  if (name == "gateways") return report.gateways;
  if (name == "gateway_decisions") return report.gateway_decisions;
  if (name == "gateway_types") return report.gateway_types;
  if (name == "sequence_flows") return report.sequence_flows;
  throw ConfigError("unknown similarity category '" + std::string(name) + "'");
}

SimilarityReport pme_similarity(const PmeBundle& generated, const PmeBundle& gold, Matcher& matcher) {
  const Rendered g(generated), t(gold);
  SimilarityReport r;
  r.tasks = score(matcher.match(g.tasks, t.tasks), g.tasks.size(), t.tasks.size());
  r.events = score(matcher.match(g.events, t.events), g.events.size(), t.events.size());
  r.gateways = score(matcher.match(g.gateways, t.gateways), g.gateways.size(), t.gateways.size());
  r.gateway_decisions = score(matcher.match(g.decisions, t.decisions), g.decisions.size(), t.decisions.size());

  // Gateway types are an enumeration; they never go through the semantic backend.
  std::vector<std::vector<double>> same(g.types.size(), std::vector<double>(t.types.size()));
  for (std::size_t i = 0; i < g.types.size(); ++i)
    for (std::size_t j = 0; j < t.types.size(); ++j) same[i][j] = g.types[i] == t.types[j] ? 1.0 : 0.0;
  r.gateway_types = score(greedy_match(same, g.types, t.types, 1.0), g.types.size(), t.types.size());

  // Node correspondence induced by the node-level categories.
  std::map<std::string, std::string> node_map;
  auto record = [&](const CategoryScore& s, const std::vector<std::string>& gids, const std::vector<std::string>& tids) {
    for (const Match& m : s.pairs) node_map[gids[m.i]] = tids[m.j];
  };
  record(r.tasks, g.task_ids, t.task_ids);
  record(r.events, g.event_ids, t.event_ids);
  record(r.gateways, g.gateway_ids, t.gateway_ids);

  const auto& gf = generated.sequence_flows;
  const auto& tf = gold.sequence_flows;
  std::vector<std::string> gc, tc;
  for (const auto& f : gf) gc.push_back(f.condition.value_or(""));
  for (const auto& f : tf) tc.push_back(f.condition.value_or(""));
  std::vector<std::string> gconds, tconds;
  for (const auto& f : gf)
    if (f.condition) gconds.push_back(*f.condition);
  for (const auto& f : tf)
    if (f.condition) tconds.push_back(*f.condition);
  const auto cond_sim = matcher.similarity(gconds, tconds);

  // -1 marks pairs that are not candidates at all.
  std::vector<std::vector<double>> flow_sim(gf.size(), std::vector<double>(tf.size(), -1.0));
  std::size_t gi_cond = 0;
  for (std::size_t i = 0; i < gf.size(); ++i) {
    std::size_t tj_cond = 0;
    for (std::size_t j = 0; j < tf.size(); ++j) {
      const auto src = node_map.find(gf[i].source), dst = node_map.find(gf[i].target);
      const bool endpoints = src != node_map.end() && src->second == tf[j].source && dst != node_map.end() &&
                             dst->second == tf[j].target;
      if (endpoints) {
        if (gf[i].condition && tf[j].condition) {
          const double sim = cond_sim[gi_cond][tj_cond];
          if (sim >= matcher.config().threshold) flow_sim[i][j] = sim;
        } else if (!gf[i].condition && !tf[j].condition) {
          flow_sim[i][j] = 1.0;
        }
      }
      if (tf[j].condition) ++tj_cond;
    }
    if (gf[i].condition) ++gi_cond;
  }
  r.sequence_flows = score(greedy_match(flow_sim, gc, tc, 0.0), gf.size(), tf.size());

  const std::size_t m = r.tasks.matches + r.events.matches + r.gateways.matches + r.sequence_flows.matches;
  const std::size_t a = r.tasks.generated + r.events.generated + r.gateways.generated + r.sequence_flows.generated;
  const std::size_t b = r.tasks.gold + r.events.gold + r.gateways.gold + r.sequence_flows.gold;
  r.overall.matches = m;
  r.overall.generated = a;
  r.overall.gold = b;
  r.overall.dsc = dice(m, a, b);
  return r;
}

SimilarityReport pme_similarity(const PmeBundle& generated, const PmeBundle& gold, const MatcherConfig& config) {
  Matcher m(config);
  return pme_similarity(generated, gold, m);
}

}  // namespace pmrkit
