#include "pmrkit/structure.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

namespace pmrkit {

bool Branch::operator==(const Branch&) const = default;
bool BranchTree::operator==(const BranchTree&) const = default;

BranchTree BranchTree::sequence(std::vector<BranchTree> children) {
  BranchTree t;
  t.kind = Kind::sequence;
  t.children = std::move(children);
  return t;
}

BranchTree BranchTree::activity(std::optional<std::string> label) {
  BranchTree t;
  t.kind = Kind::activity;
  t.label = std::move(label);
  return t;
}

BranchTree BranchTree::event(EventPosition position, std::optional<std::string> label) {
  BranchTree t;
  t.kind = Kind::event;
  t.position = position;
  t.label = std::move(label);
  return t;
}

BranchTree BranchTree::exclusive(std::vector<Branch> branches, std::optional<std::string> decision) {
  BranchTree t;
  t.kind = Kind::exclusive;
  t.branches = std::move(branches);
  t.label = std::move(decision);
  return t;
}

BranchTree BranchTree::loop(Branch body, std::optional<Branch> redo, std::optional<std::string> decision) {
  BranchTree t;
  t.kind = Kind::exclusive;
  t.looping = true;
  t.branches.push_back(std::move(body));
  if (redo) t.branches.push_back(std::move(*redo));
  t.label = std::move(decision);
  return t;
}

BranchTree BranchTree::parallel(std::vector<Branch> branches) {
  BranchTree t;
  t.kind = Kind::parallel;
  t.branches = std::move(branches);
  return t;
}

std::string_view to_string(ConvertibilityVerdict::Reason reason) {
  using R = ConvertibilityVerdict::Reason;
  switch (reason) {
    case R::multiple_start_events: return "multiple_start_events";
    case R::multiple_end_events: return "multiple_end_events";
    case R::unmatched_gateway_pair: return "unmatched_gateway_pair";
    case R::irreducible_cycle: return "irreducible_cycle";
    case R::crossing_branches: return "crossing_branches";
    case R::has_pools: return "has_pools";
    case R::has_message_flows: return "has_message_flows";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Invariants, rendering, canonical form

namespace {

std::optional<std::string> check_node(const BranchTree& t, bool root) {
  using K = BranchTree::Kind;
  switch (t.kind) {
    case K::sequence:
      if (!root && t.children.empty()) return "empty sequence";
      for (std::size_t i = 0; i < t.children.size(); ++i) {
        const BranchTree& c = t.children[i];
        if (c.kind == K::event && c.position == EventPosition::start && !(root && i == 0))
          return "start marker away from the beginning of the root sequence";
        if (c.kind == K::event && c.position == EventPosition::end && !(root && i + 1 == t.children.size()))
          return "end marker away from the end of the root sequence";
        if (c.kind == K::event) continue;
        if (auto err = check_node(c, false)) return err;
      }
      return std::nullopt;
    case K::activity: return std::nullopt;
    case K::event:
      if (t.position != EventPosition::intermediate) return "start/end marker outside the root sequence";
      return std::nullopt;
    case K::exclusive:
    case K::parallel: {
      if (t.kind == K::exclusive && t.looping) {
        if (t.branches.empty() || t.branches.size() > 2) return "looping block needs one or two branches";
      } else if (t.branches.size() < 2) {
        return "block needs at least two branches";
      }
      for (const Branch& b : t.branches) {
        if (t.kind == K::parallel && b.condition) return "parallel branches carry no conditions";
        for (const BranchTree& s : b.steps) {
          if (s.kind == K::sequence) return "branch steps must not nest sequences";
          if (auto err = check_node(s, false)) return err;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

void quote(std::string& out, const std::optional<std::string>& s) {
  if (!s) {
    out += '-';
    return;
  }
  out += '"';
  for (char c : *s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
}

void render(const BranchTree& t, std::string& out) {
  using K = BranchTree::Kind;
  auto steps = [&](const std::vector<BranchTree>& list) {
    out += '(';
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i) out += ',';
      render(list[i], out);
    }
    out += ')';
  };
  switch (t.kind) {
    case K::sequence:
      out += "seq";
      steps(t.children);
      return;
    case K::activity:
      out += "act";
      quote(out, t.label);
      return;
    case K::event:
      out += "evt:";
      out += to_string(t.position);
      quote(out, t.label);
      return;
    case K::exclusive:
    case K::parallel:
      out += t.kind == K::parallel ? "and" : (t.looping ? "loop" : "xor");
      quote(out, t.label);
      out += '[';
      for (std::size_t i = 0; i < t.branches.size(); ++i) {
        if (i) out += '|';
        quote(out, t.branches[i].condition);
        out += ':';
        steps(t.branches[i].steps);
      }
      out += ']';
      return;
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

BranchTree canonical_node(const BranchTree& t);

std::vector<BranchTree> canonical_steps(const std::vector<BranchTree>& steps) {
  std::vector<BranchTree> out;
  for (const BranchTree& s : steps) {
    BranchTree c = canonical_node(s);
    // Unlabeled start/end markers are implied by expansion.
    if (c.kind == BranchTree::Kind::event && c.position != EventPosition::intermediate && !c.label) continue;
    if (c.kind == BranchTree::Kind::sequence) {
      for (BranchTree& inner : c.children) out.push_back(std::move(inner));
    } else {
      out.push_back(std::move(c));
    }
  }
  return out;
}

BranchTree canonical_node(const BranchTree& t) {
  using K = BranchTree::Kind;
  if (t.kind == K::sequence) return BranchTree::sequence(canonical_steps(t.children));
  BranchTree c = t;
  c.label = clean_label(t.label);
  c.children.clear();
  if (t.kind == K::activity || t.kind == K::event) return c;
  for (Branch& b : c.branches) {
    b.condition = clean_label(b.condition);
    b.steps = canonical_steps(b.steps);
  }
  if (c.looping) {
    if (c.branches.size() == 2 && !c.branches[1].condition && c.branches[1].steps.empty()) c.branches.pop_back();
    return c;
  }
  struct Keyed {
    std::string condition;
    std::uint64_t hash;
    std::string text;
    Branch branch;
  };
  std::vector<Keyed> keyed;
  for (Branch& b : c.branches) {
    std::string text;
    for (const BranchTree& s : b.steps) render(s, text), text += ';';
    keyed.push_back({b.condition.value_or(""), fnv1a(text), text, std::move(b)});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.condition, a.hash, a.text) < std::tie(b.condition, b.hash, b.text);
  });
  c.branches.clear();
  for (Keyed& k : keyed) c.branches.push_back(std::move(k.branch));
  return c;
}

}  // namespace

std::optional<std::string> check_tree(const BranchTree& tree) { return check_node(tree, true); }

std::string describe(const BranchTree& tree) {
  std::string out;
  render(tree, out);
  return out;
}

std::uint64_t structural_hash(const BranchTree& tree) { return fnv1a(describe(tree)); }

BranchTree canonicalize(const BranchTree& tree) { return BranchTree::sequence(canonical_steps({tree})); }

// ---------------------------------------------------------------------------
// Expansion

namespace {

class Expander {
 public:
  ProcessModel run(const BranchTree& tree) {
    std::vector<BranchTree> steps =
        tree.kind == BranchTree::Kind::sequence ? tree.children : std::vector<BranchTree>{tree};
    std::optional<std::string> start_label, end_label;
    if (!steps.empty() && steps.front().kind == BranchTree::Kind::event &&
        steps.front().position == EventPosition::start) {
      start_label = steps.front().label;
      steps.erase(steps.begin());
    }
    if (!steps.empty() && steps.back().kind == BranchTree::Kind::event &&
        steps.back().position == EventPosition::end) {
      end_label = steps.back().label;
      steps.pop_back();
    }
    std::string start = add(Node::event("start", EventPosition::start, start_label));
    auto [last, pending] = emit_steps(steps, start, std::nullopt);
    std::string end = add(Node::event("end", EventPosition::end, end_label));
    flow(last, end, pending);
    return std::move(model_);
  }

 private:
  using Exit = std::pair<std::string, std::optional<std::string>>;

  std::string add(Node node) {
    ids_.reserve(node.id);
    std::string id = node.id;
    model_.nodes.push_back(std::move(node));
    return id;
  }

  void flow(const std::string& from, const std::string& to, const std::optional<std::string>& condition) {
    model_.sequence_flows.push_back({ids_.next("flow"), from, to, condition});
  }

  Exit emit_steps(const std::vector<BranchTree>& steps, std::string from, std::optional<std::string> condition) {
    Exit cur{std::move(from), std::move(condition)};
    for (const BranchTree& s : steps) cur = emit(s, cur.first, cur.second);
    return cur;
  }

  Exit emit(const BranchTree& t, const std::string& from, const std::optional<std::string>& condition) {
    using K = BranchTree::Kind;
    switch (t.kind) {
      case K::sequence: return emit_steps(t.children, from, condition);
      case K::activity: {
        std::string id = add(Node::task(ids_.next("task"), t.label));
        flow(from, id, condition);
        return {id, std::nullopt};
      }
      case K::event: {
        std::string id = add(Node::event(ids_.next("event"), EventPosition::intermediate, t.label));
        flow(from, id, condition);
        return {id, std::nullopt};
      }
      case K::exclusive:
        if (t.looping) return emit_loop(t, from, condition);
        [[fallthrough]];
      case K::parallel: {
        GatewayType type = t.kind == K::parallel ? GatewayType::parallel : GatewayType::exclusive;
        std::string split = add(Node::gateway(ids_.next("gateway"), type, t.kind == K::exclusive ? t.label : std::nullopt));
        std::string join = ids_.next("gateway");
        flow(from, split, condition);
        for (const Branch& b : t.branches) {
          auto cond = t.kind == K::exclusive ? b.condition : std::nullopt;
          if (b.steps.empty()) {
            flow(split, join, cond);
            continue;
          }
          auto [last, pending] = emit_steps(b.steps, split, cond);
          flow(last, join, pending);
        }
        add(Node::gateway(join, type));
        return {join, std::nullopt};
      }
    }
    return {from, condition};
  }

  Exit emit_loop(const BranchTree& t, const std::string& from, const std::optional<std::string>& condition) {
    std::string join = add(Node::gateway(ids_.next("gateway"), GatewayType::exclusive));
    flow(from, join, condition);
    const Branch& body = t.branches.front();
    auto [last, pending] = emit_steps(body.steps, join, std::nullopt);
    std::string split = add(Node::gateway(ids_.next("gateway"), GatewayType::exclusive, t.label));
    flow(last, split, pending);
    if (t.branches.size() > 1 && !t.branches[1].steps.empty()) {
      auto [back, back_pending] = emit_steps(t.branches[1].steps, split, t.branches[1].condition);
      flow(back, join, back_pending);
    } else {
      flow(split, join, t.branches.size() > 1 ? t.branches[1].condition : std::nullopt);
    }
    return {split, body.condition};
  }

  ProcessModel model_;
  IdAllocator ids_;
};

}  // namespace

ProcessModel expand(const BranchTree& tree) { return Expander().run(tree); }

// ---------------------------------------------------------------------------
// Reduction

namespace {

using Reason = ConvertibilityVerdict::Reason;

class Reducer {
 public:
  explicit Reducer(const ProcessModel& model) : model_(model) {}

  StructureResult run() {
    StructureResult result;
    if (auto reason = precheck()) return fail(*reason);
    build();
    if (auto reason = normalize()) return fail(*reason);

    for (;;) {
      mismatch_ = false;
      if (dissolve() || fuse_sequence() || collapse_loop() || collapse_block()) continue;
      break;
    }
    return finish();
  }

 private:
  enum class Kind { start, end, fragment, gateway };
  struct WNode {
    Kind kind;
    bool alive = true;
    BranchTree tree;
    GatewayType type = GatewayType::exclusive;
    std::optional<std::string> label;
    std::string origin;  // model id, empty for inserted gateways
  };
  struct WEdge {
    int source, target;
    std::optional<std::string> condition;
    std::string origin;
    bool alive = true;
  };

  StructureResult fail(Reason reason) {
    StructureResult r;
    r.verdict = {false, reason};
    return r;
  }

  std::optional<Reason> precheck() const {
    if (!model_.pools.empty()) return Reason::has_pools;
    if (!model_.message_flows.empty()) return Reason::has_message_flows;
    std::size_t starts = 0, ends = 0;
    for (const Node& n : model_.nodes) {
      starts += n.is_event(EventPosition::start);
      ends += n.is_event(EventPosition::end);
    }
    if (starts != 1) return Reason::multiple_start_events;
    if (ends != 1) return Reason::multiple_end_events;
    return std::nullopt;
  }

  void build() {
    std::unordered_map<std::string, int> index;
    for (const Node& n : model_.nodes) {
      WNode w;
      w.origin = n.id;
      w.label = clean_label(n.label);
      switch (n.kind) {
        case NodeKind::task:
          w.kind = Kind::fragment;
          w.tree = BranchTree::activity(w.label);
          break;
        case NodeKind::event:
          if (n.position == EventPosition::start)
            w.kind = Kind::start;
          else if (n.position == EventPosition::end)
            w.kind = Kind::end;
          else {
            w.kind = Kind::fragment;
            w.tree = BranchTree::event(EventPosition::intermediate, w.label);
          }
          break;
        case NodeKind::gateway:
          w.kind = Kind::gateway;
          w.type = n.gateway_type;
          break;
      }
      index.emplace(n.id, static_cast<int>(nodes_.size()));
      nodes_.push_back(std::move(w));
    }
    for (const SequenceFlow& f : model_.sequence_flows)
      edges_.push_back({index.at(f.source), index.at(f.target), clean_label(f.condition), f.id});
  }

  std::vector<int> in(int v) const {
    std::vector<int> out;
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e)
      if (edges_[e].alive && edges_[e].target == v) out.push_back(e);
    return out;
  }

  std::vector<int> out(int v) const {
    std::vector<int> result;
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e)
      if (edges_[e].alive && edges_[e].source == v) result.push_back(e);
    return result;
  }

  int add_gateway(GatewayType type, std::optional<std::string> label, std::string origin) {
    WNode w;
    w.kind = Kind::gateway;
    w.type = type;
    w.label = std::move(label);
    w.origin = std::move(origin);
    nodes_.push_back(std::move(w));
    return static_cast<int>(nodes_.size()) - 1;
  }

  /// Makes every fragment single-entry/single-exit and separates mixed gateways into join + split.
  std::optional<Reason> normalize() {
    const int n = static_cast<int>(nodes_.size());
    for (int v = 0; v < n; ++v) {
      const WNode& w = nodes_[v];
      std::size_t ins = in(v).size(), outs = out(v).size();
      if (w.kind == Kind::start && ins > 0) return Reason::irreducible_cycle;
      if (w.kind == Kind::end && outs > 0) return Reason::irreducible_cycle;
      if (w.kind != Kind::start && ins == 0) return Reason::multiple_start_events;
      if (w.kind != Kind::end && outs == 0) return Reason::multiple_end_events;
    }
    for (int v = 0; v < n; ++v) {
      Kind kind = nodes_[v].kind;
      if (kind == Kind::gateway) {
        if (in(v).size() >= 2 && out(v).size() >= 2) {
          int split = add_gateway(nodes_[v].type, nodes_[v].label, nodes_[v].origin);
          nodes_[v].label.reset();
          for (int e : out(v)) edges_[e].source = split;
          edges_.push_back({v, split, std::nullopt, {}});
        }
        continue;
      }
      if (in(v).size() >= 2) {
        int join = add_gateway(GatewayType::exclusive, std::nullopt, {});
        for (int e : in(v)) edges_[e].target = join;
        edges_.push_back({join, v, std::nullopt, {}});
      }
      if (out(v).size() >= 2) {
        int split = add_gateway(GatewayType::parallel, std::nullopt, {});
        for (int e : out(v)) edges_[e].source = split;
        edges_.push_back({v, split, std::nullopt, {}});
      }
    }
    return std::nullopt;
  }

  bool is(int v, Kind k) const { return nodes_[v].alive && nodes_[v].kind == k; }
  bool simple_fragment(int v) const { return is(v, Kind::fragment) && in(v).size() == 1 && out(v).size() == 1; }

  void lose_condition(int e) {
    if (edges_[e].condition)
      losses_.push_back({ElementType::condition, edges_[e].origin, "condition outside a branch entry"});
  }

  void lose_label(int v, const char* reason) {
    if (nodes_[v].label && !nodes_[v].origin.empty())
      losses_.push_back({ElementType::decision, nodes_[v].origin, reason});
  }

  void kill_edge(int e) { edges_[e].alive = false; }
  void kill_node(int v) { nodes_[v].alive = false; }

  static void append(BranchTree& seq, const BranchTree& t) {
    if (t.kind == BranchTree::Kind::sequence)
      seq.children.insert(seq.children.end(), t.children.begin(), t.children.end());
    else
      seq.children.push_back(t);
  }

  bool dissolve() {
    for (int v = 0; v < static_cast<int>(nodes_.size()); ++v) {
      if (!is(v, Kind::gateway)) continue;
      auto ins = in(v), outs = out(v);
      if (ins.size() != 1 || outs.size() != 1) continue;
      WEdge& a = edges_[ins[0]];
      WEdge& b = edges_[outs[0]];
      if (a.source == v) continue;  // self loop on a gateway
      if (!a.condition && b.condition)
        a.condition = b.condition;
      else
        lose_condition(outs[0]);
      a.target = b.target;
      kill_edge(outs[0]);
      if (!nodes_[v].origin.empty()) {
        losses_.push_back({nodes_[v].type == GatewayType::exclusive ? ElementType::exclusive_gateway
                                                                    : ElementType::parallel_gateway,
                           nodes_[v].origin, "single-entry single-exit gateway dissolved"});
        lose_label(v, "label of a dissolved gateway");
      }
      kill_node(v);
      return true;
    }
    return false;
  }

  bool fuse_sequence() {
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
      if (!edges_[e].alive) continue;
      int u = edges_[e].source, v = edges_[e].target;
      if (u == v || !is(u, Kind::fragment) || !is(v, Kind::fragment)) continue;
      if (out(u).size() != 1 || in(v).size() != 1) continue;
      BranchTree seq = BranchTree::sequence({});
      append(seq, nodes_[u].tree);
      append(seq, nodes_[v].tree);
      nodes_[u].tree = std::move(seq);
      lose_condition(e);
      kill_edge(e);
      for (int o : out(v)) edges_[o].source = u;
      kill_node(v);
      return true;
    }
    return false;
  }

  static std::vector<BranchTree> steps_of(const BranchTree& t) {
    if (t.kind == BranchTree::Kind::sequence) return t.children;
    return {t};
  }

  bool collapse_loop() {
    for (int j = 0; j < static_cast<int>(nodes_.size()); ++j) {
      if (!is(j, Kind::gateway)) continue;
      auto j_in = in(j), j_out = out(j);
      if (j_in.size() != 2 || j_out.size() != 1) continue;
      const int e_do = j_out[0];
      int x = edges_[e_do].target;
      int body = -1, s = -1, e_into_s = e_do;
      if (x != j && simple_fragment(x)) {
        body = x;
        e_into_s = out(x)[0];
        s = edges_[e_into_s].target;
      } else if (is(x, Kind::gateway)) {
        s = x;
      } else {
        continue;
      }
      if (s == j || !is(s, Kind::gateway)) continue;
      auto s_in = in(s), s_out = out(s);
      if (s_in.size() != 1 || s_out.size() != 2) continue;

      // Which outgoing edge of s returns to j (directly or through one fragment)?
      for (int pick = 0; pick < 2; ++pick) {
        const int e_back = s_out[pick];
        const int e_exit = s_out[1 - pick];
        int redo = -1, e_back_into_j = e_back;
        int t = edges_[e_back].target;
        if (t == j) {
          // direct back edge
        } else if (t != body && simple_fragment(t) && edges_[out(t)[0]].target == j) {
          redo = t;
          e_back_into_j = out(t)[0];
        } else {
          continue;
        }
        int exit_target = edges_[e_exit].target;
        if (exit_target == j || exit_target == s || exit_target == body || exit_target == redo) continue;
        if (nodes_[j].type != GatewayType::exclusive || nodes_[s].type != GatewayType::exclusive) {
          mismatch_ = true;
          continue;
        }
        const int e_entry = j_in[0] == e_back_into_j ? j_in[1] : j_in[0];
        if (edges_[e_entry].source == s || edges_[e_entry].source == redo) continue;

        Branch do_branch{edges_[e_exit].condition, body >= 0 ? steps_of(nodes_[body].tree) : std::vector<BranchTree>{}};
        Branch redo_branch{edges_[e_back].condition,
                           redo >= 0 ? steps_of(nodes_[redo].tree) : std::vector<BranchTree>{}};
        BranchTree tree = BranchTree::loop(std::move(do_branch), std::move(redo_branch), nodes_[s].label);

        lose_condition(e_do);
        if (body >= 0) lose_condition(e_into_s);
        if (redo >= 0) lose_condition(e_back_into_j);
        lose_label(j, "label of a loop join");

        kill_edge(e_do);
        if (body >= 0) kill_edge(e_into_s), kill_node(body);
        kill_edge(e_back);
        if (redo >= 0) kill_edge(e_back_into_j), kill_node(redo);
        kill_node(s);
        edges_[e_exit].source = j;
        edges_[e_exit].condition.reset();
        nodes_[j].kind = Kind::fragment;
        nodes_[j].tree = std::move(tree);
        nodes_[j].label.reset();
        return true;
      }
    }
    return false;
  }

  bool collapse_block() {
    for (int s = 0; s < static_cast<int>(nodes_.size()); ++s) {
      if (!is(s, Kind::gateway)) continue;
      auto s_in = in(s), s_out = out(s);
      if (s_in.size() != 1 || s_out.size() < 2) continue;

      int join = -1;
      bool ok = true;
      std::vector<std::pair<int, int>> arms;  // (edge from s, fragment or -1)
      for (int e : s_out) {
        int t = edges_[e].target;
        int j = -1, frag = -1;
        if (t != s && is(t, Kind::gateway)) {
          j = t;
        } else if (simple_fragment(t)) {
          frag = t;
          j = edges_[out(t)[0]].target;
          if (!is(j, Kind::gateway) || j == s) ok = false;
        } else {
          ok = false;
        }
        if (!ok) break;
        if (join < 0) join = j;
        if (join != j) {
          ok = false;
          break;
        }
        arms.emplace_back(e, frag);
      }
      if (!ok || join < 0 || out(join).size() != 1) continue;
      if (std::find_if(arms.begin(), arms.end(), [](auto& a) { return a.second >= 0; }) == arms.end() &&
          in(join).size() != arms.size())
        continue;
      if (nodes_[join].type != nodes_[s].type) {
        mismatch_ = true;
        continue;
      }
      const std::size_t join_in = in(join).size();
      if (join_in < arms.size()) continue;
      const bool full = join_in == arms.size();
      const bool parallel = nodes_[s].type == GatewayType::parallel;

      std::vector<Branch> branches;
      for (const auto& [e, frag] : arms) {
        Branch b;
        if (parallel)
          lose_condition(e);
        else
          b.condition = edges_[e].condition;
        if (frag >= 0) {
          b.steps = steps_of(nodes_[frag].tree);
          int tail = out(frag)[0];
          lose_condition(tail);
          kill_edge(tail);
          kill_node(frag);
        }
        kill_edge(e);
        branches.push_back(std::move(b));
      }
      BranchTree tree;
      if (parallel) {
        lose_label(s, "label of a parallel gateway");
        tree = BranchTree::parallel(std::move(branches));
      } else {
        tree = BranchTree::exclusive(std::move(branches), nodes_[s].label);
      }
      nodes_[s].kind = Kind::fragment;
      nodes_[s].tree = std::move(tree);
      nodes_[s].label.reset();
      if (full) {
        lose_label(join, "label of a join gateway");
        for (int o : out(join)) edges_[o].source = s;
        kill_node(join);
      } else {
        edges_.push_back({s, join, std::nullopt, {}});
      }
      return true;
    }
    return false;
  }

  bool has_cycle() const {
    const int n = static_cast<int>(nodes_.size());
    std::vector<int> state(n, 0);
    std::function<bool(int)> visit = [&](int u) {
      state[u] = 1;
      for (int e : out(u)) {
        int v = edges_[e].target;
        if (state[v] == 1) return true;
        if (state[v] == 0 && visit(v)) return true;
      }
      state[u] = 2;
      return false;
    };
    for (int u = 0; u < n; ++u)
      if (nodes_[u].alive && state[u] == 0 && visit(u)) return true;
    return false;
  }

  StructureResult finish() {
    int start = -1, end = -1, frag = -1;
    std::size_t alive = 0;
    for (int v = 0; v < static_cast<int>(nodes_.size()); ++v) {
      if (!nodes_[v].alive) continue;
      ++alive;
      if (nodes_[v].kind == Kind::start) start = v;
      if (nodes_[v].kind == Kind::end) end = v;
      if (nodes_[v].kind == Kind::fragment) frag = v;
    }
    bool reduced = false;
    if (alive == 2) {
      auto o = out(start);
      reduced = o.size() == 1 && edges_[o[0]].target == end;
    } else if (alive == 3 && frag >= 0) {
      auto a = out(start), b = out(frag);
      reduced = a.size() == 1 && edges_[a[0]].target == frag && b.size() == 1 && edges_[b[0]].target == end;
    }
    if (!reduced) {
      Reason reason = mismatch_ ? Reason::unmatched_gateway_pair
                      : has_cycle() ? Reason::irreducible_cycle
                                    : Reason::crossing_branches;
      return fail(reason);
    }
    for (int e : out(start)) lose_condition(e);
    if (frag >= 0)
      for (int e : out(frag)) lose_condition(e);

    BranchTree root = BranchTree::sequence({});
    if (nodes_[start].label) root.children.push_back(BranchTree::event(EventPosition::start, nodes_[start].label));
    if (frag >= 0) append(root, nodes_[frag].tree);
    if (nodes_[end].label) root.children.push_back(BranchTree::event(EventPosition::end, nodes_[end].label));

    StructureResult r;
    r.tree = canonicalize(root);
    r.verdict = {true, std::nullopt};
    r.losses = std::move(losses_);
    return r;
  }

  const ProcessModel& model_;
  std::vector<WNode> nodes_;
  std::vector<WEdge> edges_;
  std::vector<Loss> losses_;
  bool mismatch_ = false;
};

}  // namespace

StructureResult to_branch_tree(const ProcessModel& model) { return Reducer(model).run(); }

}  // namespace pmrkit
