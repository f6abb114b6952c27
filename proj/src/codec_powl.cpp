#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "codec_internal.hpp"
#include "pmrkit/errors.hpp"

namespace pmrkit::detail {

namespace {

using K = BranchTree::Kind;

std::string py_string(const std::optional<std::string>& label) {
  std::string out = "\"";
  if (label) {
    for (char c : normalize_label(*label)) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
  }
  return out + "\"";
}

class Emitter {
 public:
  std::string run(const BranchTree& tree) {
    std::string final_expr = steps_expr(tree.children);
    if (final_expr == "None") final_expr = "partial_order(dependencies=[])";
    out_ += "final_model = " + final_expr + "\n";
    return out_;
  }

 private:
  std::string fresh(const char* prefix) { return prefix + std::to_string(++counter_[prefix]); }

  std::string steps_expr(const std::vector<BranchTree>& steps) {
    std::vector<std::string> parts;
    for (const BranchTree& s : steps) {
      if (s.kind == K::event) continue;
      if (s.kind == K::sequence) {
        for (const BranchTree& c : s.children) parts.push_back(emit(c));
        continue;
      }
      parts.push_back(emit(s));
    }
    if (parts.empty()) return "None";
    if (parts.size() == 1) return parts.front();
    std::string deps;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (i) deps += ", ";
      deps += "(" + parts[i] + ", " + parts[i + 1] + ")";
    }
    std::string name = fresh("seq");
    out_ += name + " = partial_order(dependencies=[" + deps + "])\n";
    return name;
  }

  std::string emit(const BranchTree& t) {
    switch (t.kind) {
      case K::sequence: return steps_expr(t.children);
      case K::event: return "None";
      case K::activity: {
        std::string name = fresh("a");
        out_ += name + " = activity(" + py_string(t.label) + ")\n";
        return name;
      }
      case K::exclusive: {
        if (t.looping) {
          std::string body = steps_expr(t.branches[0].steps);
          std::string redo = t.branches.size() > 1 ? steps_expr(t.branches[1].steps) : "None";
          std::string name = fresh("loop");
          out_ += name + " = loop(do=" + body + ", redo=" + redo + ")\n";
          return name;
        }
        std::string args;
        for (const Branch& b : t.branches) {
          if (!args.empty()) args += ", ";
          args += steps_expr(b.steps);
        }
        std::string name = fresh("choice");
        out_ += name + " = xor(" + args + ")\n";
        return name;
      }
      case K::parallel: {
        std::string deps;
        for (const Branch& b : t.branches) {
          if (!deps.empty()) deps += ", ";
          deps += "(" + steps_expr(b.steps) + ",)";
        }
        std::string name = fresh("par");
        out_ += name + " = partial_order(dependencies=[" + deps + "])\n";
        return name;
      }
    }
    return "None";
  }

  std::string out_;
  std::map<std::string, int> counter_;
};

// ---------------------------------------------------------------------------
// Structural parser for the constructor-call subset

struct Tok {
  enum Kind { name, string, number, punct, newline, end } kind;
  std::string text;
  std::size_t line = 0, column = 0;
};

std::vector<Tok> tokenize(std::string_view src) {
  std::vector<Tok> out;
  std::size_t i = 0, line = 1, line_start = 0;
  int depth = 0;
  auto push = [&](Tok::Kind k, std::string text, std::size_t at) {
    out.push_back({k, std::move(text), line, at - line_start + 1});
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      if (depth == 0 && (out.empty() || out.back().kind != Tok::newline)) push(Tok::newline, "\n", i);
      ++i;
      ++line;
      line_start = i;
      continue;
    }
    if (c == '\\' && i + 1 < src.size() && src[i + 1] == '\n') {
      i += 2;
      ++line;
      line_start = i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t b = i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      push(Tok::name, std::string(src.substr(b, i - b)), b);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t b = i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
      push(Tok::number, std::string(src.substr(b, i - b)), b);
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t b = i;
      bool triple = src.substr(i, 3) == std::string(3, c);
      std::size_t q = triple ? 3 : 1;
      i += q;
      std::string text;
      for (;;) {
        if (i >= src.size() || (!triple && src[i] == '\n'))
          throw ParseError("POWL: unterminated string", line, b - line_start + 1, "a closing quote");
        if (src.substr(i, q) == std::string(q, c)) {
          i += q;
          break;
        }
        if (src[i] == '\\' && i + 1 < src.size()) {
          char n = src[i + 1];
          text += n == 'n' ? '\n' : n == 't' ? '\t' : n;
          i += 2;
          continue;
        }
        if (src[i] == '\n') ++line, line_start = i + 1;
        text += src[i++];
      }
      push(Tok::string, std::move(text), b);
      continue;
    }
    if (std::string_view("()[],=.*{}:").find(c) != std::string_view::npos) {
      if (c == '(' || c == '[' || c == '{') ++depth;
      if (c == ')' || c == ']' || c == '}') depth = std::max(0, depth - 1);
      push(Tok::punct, std::string(1, c), i);
      ++i;
      continue;
    }
    throw ParseError("POWL: unexpected character '" + std::string(1, c) + "'", line, i - line_start + 1,
                     "a Python expression");
  }
  push(Tok::end, "", i);
  return out;
}

/// A value of the restricted language.
struct Value {
  enum Kind { none, node, string, list, generator, other } kind = none;
  BranchTree tree;
  /// Identity of a POWL node; copies made through variables share it.
  int uid = -1;
  std::string text;
  std::vector<Value> items;
};

class PowlParser {
 public:
  explicit PowlParser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  BranchTree run() {
    std::optional<Value> final_value, last_value;
    while (peek().kind != Tok::end) {
      if (peek().kind == Tok::newline) {
        ++pos_;
        continue;
      }
      if (is_name("import") || is_name("from")) {
        while (peek().kind != Tok::newline && peek().kind != Tok::end) ++pos_;
        continue;
      }
      if (peek().kind == Tok::name && punct_at("=", 1)) {
        std::string target = toks_[pos_].text;
        pos_ += 2;
        Value v = expression();
        vars_[target] = v;
        if (v.kind == Value::node || v.kind == Value::none) last_value = v;
        if (target == "final_model") final_value = v;
      } else {
        expression();
      }
      if (peek().kind != Tok::newline && peek().kind != Tok::end)
        fail("unexpected '" + peek().text + "' after statement", "end of line");
    }
    std::optional<Value> result = final_value ? final_value : last_value;
    if (!result) throw ParseError("POWL: no model is assigned", 0, 0, "an assignment such as 'final_model = ...'");
    return canonicalize(BranchTree::sequence(steps(*result)));
  }

 private:
  const Tok& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool is_name(std::string_view n) const { return peek().kind == Tok::name && peek().text == n; }
  bool punct_at(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::punct && peek(ahead).text == p;
  }

  [[noreturn]] void fail(const std::string& message, const std::string& expected) const {
    throw ParseError("POWL: " + message, peek().line, peek().column, expected);
  }

  void expect(std::string_view p) {
    if (!punct_at(p)) fail("unexpected '" + peek().text + "'", "'" + std::string(p) + "'");
    ++pos_;
  }

  void skip_newlines() {
    while (peek().kind == Tok::newline) ++pos_;
  }

  Value expression() {
    skip_newlines();
    const Tok& t = peek();
    if (t.kind == Tok::string) {
      ++pos_;
      Value v{Value::string};
      v.text = t.text;
      while (peek().kind == Tok::string) v.text += toks_[pos_++].text;
      return v;
    }
    if (t.kind == Tok::number) {
      ++pos_;
      return Value{Value::other};
    }
    if (punct_at("[") || punct_at("(")) {
      std::string close = punct_at("[") ? "]" : ")";
      ++pos_;
      Value v{Value::list};
      skip_newlines();
      while (!punct_at(close)) {
        v.items.push_back(expression());
        skip_newlines();
        if (punct_at(",")) {
          ++pos_;
          skip_newlines();
        } else if (!punct_at(close)) {
          fail("unexpected '" + peek().text + "'", "',' or '" + close + "'");
        }
      }
      ++pos_;
      return v;
    }
    if (t.kind != Tok::name) fail("unexpected '" + t.text + "'", "an expression");

    std::vector<std::string> path{t.text};
    ++pos_;
    while (punct_at(".") && peek(1).kind == Tok::name) {
      path.push_back(peek(1).text);
      pos_ += 2;
    }
    if (!punct_at("(")) {
      if (path.size() == 1 && path[0] == "None") return Value{Value::none};
      if (path.size() == 1) {
        auto it = vars_.find(path[0]);
        if (it == vars_.end()) fail("undefined name '" + path[0] + "'", "a previously assigned variable");
        return it->second;
      }
      return Value{Value::other};
    }
    return call(path);
  }

  Value call(const std::vector<std::string>& path) {
    const Tok& at = peek();
    expect("(");
    std::vector<Value> positional;
    std::map<std::string, Value> keyword;
    skip_newlines();
    while (!punct_at(")")) {
      if (peek().kind == Tok::name && punct_at("=", 1)) {
        std::string key = peek().text;
        pos_ += 2;
        keyword[key] = expression();
      } else {
        positional.push_back(expression());
      }
      skip_newlines();
      if (punct_at(",")) {
        ++pos_;
        skip_newlines();
      } else if (!punct_at(")")) {
        fail("unexpected '" + peek().text + "'", "',' or ')'");
      }
    }
    ++pos_;

    const std::string& fn = path.back();
    auto arg = [&](std::size_t index, const char* key) -> const Value* {
      if (auto it = keyword.find(key); it != keyword.end()) return &it->second;
      if (index < positional.size()) return &positional[index];
      return nullptr;
    };

    if (fn == "ModelGenerator") return Value{Value::generator};
    if (fn == "print") return Value{Value::other};
    if (fn == "activity" || fn == "Transition") {
      const Value* label = arg(0, "label");
      if (!label || label->kind != Value::string)
        throw ParseError("POWL: activity() needs a string label", at.line, at.column, "activity(\"label\")");
      return node(BranchTree::activity(clean_label(label->text)));
    }
    if (fn == "silent_transition" || fn == "SilentTransition") return Value{Value::none};
    if (fn == "xor") {
      std::vector<Value> children = positional;
      if (auto it = keyword.find("children"); it != keyword.end()) children = it->second.items;
      if (children.empty()) throw ParseError("POWL: xor() needs children", at.line, at.column, "xor(a, b)");
      if (children.size() == 1) return children.front();
      std::vector<Branch> branches;
      for (const Value& c : children) branches.push_back({std::nullopt, steps(c)});
      return node(BranchTree::exclusive(std::move(branches)));
    }
    if (fn == "loop") {
      const Value* body = arg(0, "do");
      const Value* redo = arg(1, "redo");
      Branch b{std::nullopt, body ? steps(*body) : std::vector<BranchTree>{}};
      Branch r{std::nullopt, redo ? steps(*redo) : std::vector<BranchTree>{}};
      return node(BranchTree::loop(std::move(b), std::move(r)));
    }
    if (fn == "partial_order" || fn == "StrictPartialOrder") {
      const Value* deps = arg(0, "dependencies");
      if (!deps) deps = arg(0, "nodes");
      return partial_order(deps ? *deps : Value{Value::list}, at);
    }
    throw ParseError("POWL: unknown constructor '" + fn + "'", at.line, at.column,
                     "activity, xor, loop or partial_order");
  }

  Value node(BranchTree tree) {
    Value v{Value::node};
    v.tree = std::move(tree);
    v.uid = next_uid_++;
    return v;
  }

  static std::vector<BranchTree> steps(const Value& v) {
    if (v.kind == Value::none) return {};
    if (v.kind != Value::node) return {};
    if (v.tree.kind == K::sequence) return v.tree.children;
    return {v.tree};
  }

  /// Decomposes a series-parallel partial order into Sequence/Parallel blocks.
  Value partial_order(const Value& deps, const Tok& at) {
    std::vector<int> order;
    std::map<int, BranchTree> trees;
    std::set<std::pair<int, int>> edges;
    auto add_node = [&](const Value& v) -> int {
      if (v.kind != Value::node) return -1;
      if (!trees.count(v.uid)) {
        trees.emplace(v.uid, v.tree);
        order.push_back(v.uid);
      }
      return v.uid;
    };
    for (const Value& d : deps.items) {
      if (d.kind == Value::node) {
        add_node(d);
        continue;
      }
      if (d.kind != Value::list)
        throw ParseError("POWL: a dependency must be a tuple of nodes", at.line, at.column, "(a, b) or (a,)");
      int prev = -1;
      for (const Value& item : d.items) {
        int u = add_node(item);
        if (u < 0) continue;
        if (prev >= 0 && prev != u) edges.insert({prev, u});
        prev = u;
      }
    }
    const int n = static_cast<int>(order.size());
    std::map<int, int> index;
    for (int i = 0; i < n; ++i) index[order[i]] = i;
    std::vector<std::vector<bool>> less(n, std::vector<bool>(n, false));
    for (auto [a, b] : edges) less[index[a]][index[b]] = true;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        if (less[i][k])
          for (int j = 0; j < n; ++j)
            if (less[k][j]) less[i][j] = true;
    for (int i = 0; i < n; ++i)
      if (less[i][i]) throw ParseError("POWL: partial order has a cycle", at.line, at.column, "acyclic dependencies");

    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    std::vector<BranchTree> by_index;
    for (int uid : order) by_index.push_back(trees.at(uid));
    return node(decompose(all, less, by_index, at));
  }

  static std::vector<std::vector<int>> components(const std::vector<int>& set, bool comparable,
                                                  const std::vector<std::vector<bool>>& less) {
    std::vector<std::vector<int>> out;
    std::vector<bool> seen(set.size(), false);
    for (std::size_t s = 0; s < set.size(); ++s) {
      if (seen[s]) continue;
      std::vector<int> comp;
      std::vector<std::size_t> stack{s};
      seen[s] = true;
      while (!stack.empty()) {
        std::size_t x = stack.back();
        stack.pop_back();
        comp.push_back(set[x]);
        for (std::size_t y = 0; y < set.size(); ++y) {
          if (seen[y]) continue;
          bool related = less[set[x]][set[y]] || less[set[y]][set[x]];
          if (related == comparable) {
            seen[y] = true;
            stack.push_back(y);
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
    return out;
  }

  BranchTree decompose(const std::vector<int>& set, const std::vector<std::vector<bool>>& less,
                       const std::vector<BranchTree>& trees, const Tok& at) const {
    if (set.empty()) return BranchTree::sequence({});
    if (set.size() == 1) return trees[set.front()];
    auto parallel = components(set, true, less);
    if (parallel.size() > 1) {
      std::vector<Branch> branches;
      for (const auto& c : parallel) {
        BranchTree t = decompose(c, less, trees, at);
        branches.push_back({std::nullopt, t.kind == K::sequence ? t.children : std::vector<BranchTree>{t}});
      }
      return BranchTree::parallel(std::move(branches));
    }
    auto series = components(set, false, less);
    if (series.size() > 1) {
      std::sort(series.begin(), series.end(),
                [&](const std::vector<int>& a, const std::vector<int>& b) { return less[a.front()][b.front()]; });
      std::vector<BranchTree> children;
      for (const auto& c : series) {
        BranchTree t = decompose(c, less, trees, at);
        if (t.kind == K::sequence)
          children.insert(children.end(), t.children.begin(), t.children.end());
        else
          children.push_back(std::move(t));
      }
      return BranchTree::sequence(std::move(children));
    }
    throw ParseError("POWL: partial order is not series-parallel", at.line, at.column,
                     "dependencies forming sequences and concurrent branches");
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, Value> vars_;
  int next_uid_ = 0;
};

}  // namespace

std::string encode_powl(const BranchTree& tree) { return Emitter().run(restrict_tree(tree, PmrId::powl_code)); }

BranchTree decode_powl(std::string_view text) { return PowlParser(tokenize(text)).run(); }

}  // namespace pmrkit::detail
