#include <algorithm>
#include <cctype>
#include <set>

#include "codec_internal.hpp"
#include "pmrkit/errors.hpp"

namespace pmrkit::detail {

namespace {

bool is_keyword(std::string_view id) {
  std::string lower;
  for (char c : id) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "node" || lower == "edge" || lower == "graph" || lower == "digraph" || lower == "subgraph" ||
         lower == "strict";
}

std::string quote(const std::optional<std::string>& text) {
  std::string out = "\"";
  if (text) {
    for (char c : normalize_label(*text)) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
  }
  return out + "\"";
}

std::string_view default_name(const Node& n) {
  switch (n.kind) {
    case NodeKind::task: return "task";
    case NodeKind::gateway: return "gateway";
    case NodeKind::event:
      return n.position == EventPosition::start ? "start" : n.position == EventPosition::end ? "end" : "event";
  }
  return "node";
}

}  // namespace

std::string encode_graphviz(const ProcessModel& model, std::map<std::string, std::string>* renamed) {
  IdAllocator ids;
  std::map<std::string, std::string> id_of;
  for (const Node& n : model.nodes) {
    auto label = clean_label(n.label);
    std::string id = ids.make(label ? *label : std::string(default_name(n)), true);
    while (is_keyword(id)) id = ids.make(id + "_", true);
    id_of[n.id] = id;
    if (renamed && id != n.id) (*renamed)[n.id] = id;
  }

  std::set<std::string> has_incoming;
  for (const SequenceFlow& f : model.sequence_flows) has_incoming.insert(f.target);

  std::string out = "digraph process {\n  rankdir=LR;\n";
  for (const Node& n : model.nodes) {
    std::string_view shape = "box";
    if (n.kind == NodeKind::gateway) shape = n.gateway_type == GatewayType::parallel ? "Mdiamond" : "diamond";
    if (n.kind == NodeKind::event)
      shape = n.position == EventPosition::start ? "circle" : n.position == EventPosition::end ? "doublecircle" : "Mcircle";
    out += "  " + id_of[n.id] + " [shape=" + std::string(shape) + ", label=" + quote(n.label);
    // A plain circle reads as a start only without incoming flows.
    if (n.is_event(EventPosition::start) && has_incoming.count(n.id)) out += ", class=\"start\"";
    out += "];\n";
  }
  for (const SequenceFlow& f : model.sequence_flows) {
    out += "  " + id_of[f.source] + " -> " + id_of[f.target];
    if (auto c = clean_label(f.condition)) out += " [label=" + quote(c) + "]";
    out += ";\n";
  }
  out += "}\n";
  return out;
}

namespace {

struct Token {
  enum Kind { id, punct, arrow, end } kind;
  std::string text;
  /// Quoted and HTML strings are never keywords.
  bool quoted = false;
  std::size_t line = 0, column = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    for (;;) {
      skip();
      Token t;
      t.line = line_;
      t.column = pos_ - line_start_ + 1;
      if (pos_ >= text_.size()) {
        t.kind = Token::end;
        tokens.push_back(t);
        return tokens;
      }
      char c = text_[pos_];
      if (c == '"') {
        t.kind = Token::id;
        t.quoted = true;
        t.text = quoted();
        // "a" + "b" concatenation
        for (;;) {
          std::size_t save = pos_, save_line = line_, save_start = line_start_;
          skip();
          if (pos_ < text_.size() && text_[pos_] == '+') {
            ++pos_;
            skip();
            if (pos_ < text_.size() && text_[pos_] == '"') {
              t.text += quoted();
              continue;
            }
          }
          pos_ = save, line_ = save_line, line_start_ = save_start;
          break;
        }
      } else if (c == '<') {
        t.kind = Token::id;
        t.quoted = true;
        t.text = html();
      } else if (c == '-' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == '>' || text_[pos_ + 1] == '-')) {
        t.kind = Token::arrow;
        t.text = std::string(text_.substr(pos_, 2));
        pos_ += 2;
      } else if (std::string_view("{}[];,=:").find(c) != std::string_view::npos) {
        t.kind = Token::punct;
        t.text = std::string(1, c);
        ++pos_;
      } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
                 static_cast<unsigned char>(c) >= 0x80) {
        t.kind = Token::id;
        std::size_t begin = pos_;
        bool numeral = std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-';
        ++pos_;
        while (pos_ < text_.size()) {
          auto d = static_cast<unsigned char>(text_[pos_]);
          bool ok = numeral ? (std::isdigit(d) || d == '.')
                            : (std::isalnum(d) || d == '_' || d >= 0x80);
          if (!ok) break;
          ++pos_;
        }
        t.text = std::string(text_.substr(begin, pos_ - begin));
      } else {
        throw ParseError("graphviz: unexpected character '" + std::string(1, c) + "'", t.line, t.column,
                         "an identifier, string or punctuation");
      }
      tokens.push_back(std::move(t));
    }
  }

 private:
  void advance_char() {
    if (text_[pos_] == '\n') {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance_char();
      } else if (text_.substr(pos_, 2) == "//" || (c == '#' && pos_ == line_start_)) {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (text_.substr(pos_, 2) == "/*") {
        pos_ += 2;
        while (pos_ < text_.size() && text_.substr(pos_, 2) != "*/") advance_char();
        pos_ = std::min(text_.size(), pos_ + 2);
      } else {
        return;
      }
    }
  }

  std::string quoted() {
    std::size_t line = line_, column = pos_ - line_start_ + 1;
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        char n = text_[pos_ + 1];
        if (n == '"' || n == '\\')
          out += n;
        else if (n == 'n' || n == 'l' || n == 'r')
          out += '\n';
        else if (n == '\n')
          ;  // line continuation
        else
          out += '\\', out += n;
        pos_ += 2;
        continue;
      }
      out += text_[pos_];
      advance_char();
    }
    if (pos_ >= text_.size()) throw ParseError("graphviz: unterminated string", line, column, "'\"'");
    ++pos_;
    return out;
  }

  std::string html() {
    std::size_t line = line_, column = pos_ - line_start_ + 1;
    int depth = 0;
    std::string out;
    bool in_tag = false;
    do {
      if (pos_ >= text_.size()) throw ParseError("graphviz: unterminated HTML string", line, column, "'>'");
      char c = text_[pos_];
      if (c == '<') {
        ++depth;
        if (depth > 1) in_tag = true;
      } else if (c == '>') {
        --depth;
        in_tag = false;
        if (depth > 0) out += ' ';
      } else if (!in_tag) {
        out += c;
      }
      advance_char();
    } while (depth > 0);
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

using Attributes = std::map<std::string, std::string>;

class DotParser {
 public:
  DotParser(std::vector<Token> tokens, GraphBuilder& graph) : tokens_(std::move(tokens)), graph_(graph) {}

  void run() {
    if (keyword("strict")) ++pos_;
    if (keyword("graph") || keyword("digraph")) {
      ++pos_;
    } else {
      fail("expected 'digraph'", "'digraph'");
    }
    if (peek().kind == Token::id) ++pos_;
    expect("{");
    Scope root;
    statements(root);
    expect("}");
  }

 private:
  struct Scope {
    Attributes node_defaults;
    Attributes edge_defaults;
  };

  const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]; }

  bool keyword(std::string_view word, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    if (t.kind != Token::id || t.quoted || t.text.size() != word.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(t.text[i])) != word[i]) return false;
    return true;
  }

  bool punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::punct && peek(ahead).text == p;
  }

  [[noreturn]] void fail(const std::string& message, const std::string& expected) const {
    throw ParseError("graphviz: " + message, peek().line, peek().column, expected);
  }

  void expect(std::string_view p) {
    if (!punct(p)) fail("unexpected '" + peek().text + "'", "'" + std::string(p) + "'");
    ++pos_;
  }

  std::string identifier() {
    if (peek().kind != Token::id) fail("unexpected '" + peek().text + "'", "an identifier");
    return tokens_[pos_++].text;
  }

  void statements(Scope& scope) {
    while (!punct("}") && peek().kind != Token::end) {
      if (punct(";") || punct(",")) {
        ++pos_;
        continue;
      }
      statement(scope);
    }
  }

  void statement(Scope& scope) {
    if ((keyword("node") || keyword("edge") || keyword("graph")) && punct("[", 1)) {
      bool node = keyword("node"), edge = keyword("edge");
      ++pos_;
      Attributes attrs = attribute_lists();
      Attributes& target = node ? scope.node_defaults : scope.edge_defaults;
      if (node || edge)
        for (auto& [k, v] : attrs) target[k] = v;
      return;
    }
    if (peek().kind == Token::id && punct("=", 1)) {
      pos_ += 2;
      identifier();
      return;
    }
    std::vector<std::string> left = operand(scope);
    if (peek().kind != Token::arrow) {
      // A node statement (a lone subgraph is fully handled by operand()).
      if (last_operand_was_node_) {
        Attributes& attrs = declared_[left.front()];
        if (attrs.empty()) attrs = scope.node_defaults;
        for (auto& [k, v] : attribute_lists()) attrs[k] = v;
        declare(left.front(), attrs);
      }
      return;
    }
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> hops;
    while (peek().kind == Token::arrow) {
      ++pos_;
      std::vector<std::string> right = operand(scope);
      hops.emplace_back(left, right);
      left = std::move(right);
    }
    Attributes attrs = scope.edge_defaults;
    for (auto& [k, v] : attribute_lists()) attrs[k] = v;
    std::optional<std::string> condition;
    if (auto it = attrs.find("label"); it != attrs.end())
      condition = it->second;
    else if (auto x = attrs.find("xlabel"); x != attrs.end())
      condition = x->second;
    for (auto& [from, to] : hops)
      for (const std::string& a : from)
        for (const std::string& b : to) graph_.edge(a, b, condition);
  }

  /// A node id (with optional port) or a subgraph; returns the node keys it stands for.
  std::vector<std::string> operand(Scope& scope) {
    if (keyword("subgraph") || punct("{")) {
      if (keyword("subgraph")) {
        ++pos_;
        if (peek().kind == Token::id) ++pos_;
      }
      expect("{");
      Scope inner = scope;
      std::size_t before = members_.size();
      statements(inner);
      expect("}");
      last_operand_was_node_ = false;
      return {members_.begin() + static_cast<std::ptrdiff_t>(before), members_.end()};
    }
    std::string key = identifier();
    if (punct(":")) {
      ++pos_;
      identifier();
      if (punct(":")) {
        ++pos_;
        identifier();
      }
    }
    members_.push_back(key);
    last_operand_was_node_ = true;
    return {key};
  }

  Attributes attribute_lists() {
    Attributes attrs;
    while (punct("[")) {
      ++pos_;
      while (!punct("]")) {
        if (peek().kind == Token::end) fail("unterminated attribute list", "']'");
        if (punct(",") || punct(";")) {
          ++pos_;
          continue;
        }
        std::string key = identifier();
        std::string value = "true";
        if (punct("=")) {
          ++pos_;
          value = identifier();
        }
        attrs[key] = value;
      }
      ++pos_;
    }
    return attrs;
  }

  void declare(const std::string& key, const Attributes& attrs) {
    std::string shape;
    if (auto it = attrs.find("shape"); it != attrs.end()) shape = it->second;
    std::string lower;
    for (char c : shape) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    Shape s = Shape::task;
    if (lower == "diamond") s = Shape::exclusive;
    if (lower == "mdiamond") s = Shape::parallel;
    if (lower == "circle" || lower == "point") s = Shape::event;
    if (lower == "doublecircle") s = Shape::end_event;
    if (lower == "mcircle") s = Shape::intermediate_event;
    if (auto it = attrs.find("class"); it != attrs.end() && s == Shape::event) {
      if (it->second == "start") s = Shape::start_event;
      if (it->second == "intermediate") s = Shape::intermediate_event;
      if (it->second == "end") s = Shape::end_event;
    }
    std::optional<std::string> label = key;
    if (auto it = attrs.find("label"); it != attrs.end()) label = it->second;
    graph_.declare(key, s, label);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  GraphBuilder& graph_;
  std::vector<std::string> members_;
  std::map<std::string, Attributes> declared_;
  bool last_operand_was_node_ = false;
};

}  // namespace

DecodeResult decode_graphviz(std::string_view text, const DecodeOptions& options) {
  GraphBuilder graph("graphviz");
  DotParser(Lexer(text).run(), graph).run();
  return graph.finish(options.strict);
}

}  // namespace pmrkit::detail
