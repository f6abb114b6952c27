#pragma once

// Seeded random generators for property tests.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "pmrkit/codecs.hpp"
#include "pmrkit/model.hpp"
#include "pmrkit/structure.hpp"

namespace pmrkit::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(engine_); }
  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(uniform(0, static_cast<int>(items.size()) - 1))];
  }
  template <class T>
  void shuffle(std::vector<T>& items) {
    std::shuffle(items.begin(), items.end(), engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Labels exercising every escaping path: quotes, markup, brackets, pipes, unicode, padding.
inline const std::vector<std::string>& label_pool() {
  static const std::vector<std::string> pool = {
      "Check order",        "Ship goods",     "approve",           "Send \"invoice\"",  "a < b & c > d",
      "Review [draft]",     "x | y",          "50% done",          "Item #3",           "Größe prüfen",
      "  padded   label ",  "end",            "graph",             "back\\slash",       "semi; colon",
      "(optional) step",    "{braces}",       "--> arrow",         "it's fine",         "Notify customer",
      "A",                  "B",              "Archive record",    "yes",               "no",
      "amount > 100",       "retry?",         "digraph",           "1st task",          "tab\tseparated",
  };
  return pool;
}

inline std::optional<std::string> random_label(Rng& rng, double present = 0.8) {
  if (!rng.chance(present)) return std::nullopt;
  return rng.pick(label_pool());
}

inline std::string random_identifier(Rng& rng, IdAllocator& ids) {
  static const std::vector<std::string> stems = {"n", "task", "Node", "_x", "end", "graph", "a-b", "gw", "evt", "Q"};
  std::string base = rng.pick(stems);
  if (rng.chance(0.7)) base += std::to_string(rng.uniform(0, 99));
  if (!ids.contains(base)) {
    ids.reserve(base);
    return base;
  }
  return ids.make(base);
}

struct ModelOptions {
  ElementTypeSet supported = ElementTypeSet::all();
  int max_nodes = 12;
  int max_extra_flows = 8;
  /// Ignore the event degree rules, e.g. start events with incoming flows.
  bool any_degree = false;
};

/// A well-formed model using only `supported` types. Start events have no incoming flow, end
/// events no outgoing flow and at least one incoming flow, intermediate events both directions.
inline ProcessModel random_model(Rng& rng, const ModelOptions& options = {}) {
  using E = ElementType;
  const ElementTypeSet& s = options.supported;
  ProcessModel m;
  IdAllocator ids;
  ids.reserve(m.id);

  std::vector<E> node_types;
  for (E t : {E::task, E::start_event, E::intermediate_event, E::end_event, E::exclusive_gateway, E::parallel_gateway})
    if (s.contains(t)) node_types.push_back(t);
  const int n = node_types.empty() ? 0 : rng.uniform(0, options.max_nodes);
  for (int i = 0; i < n; ++i) {
    E t = rng.pick(node_types);
    std::string id = random_identifier(rng, ids);
    switch (t) {
      case E::task: m.nodes.push_back(Node::task(id, random_label(rng))); break;
      case E::start_event: m.nodes.push_back(Node::event(id, EventPosition::start, random_label(rng, 0.5))); break;
      case E::intermediate_event:
        m.nodes.push_back(Node::event(id, EventPosition::intermediate, random_label(rng, 0.5)));
        break;
      case E::end_event: m.nodes.push_back(Node::event(id, EventPosition::end, random_label(rng, 0.5))); break;
      default: {
        GatewayType g = t == E::parallel_gateway ? GatewayType::parallel : GatewayType::exclusive;
        std::optional<std::string> decision = s.contains(E::decision) ? random_label(rng, 0.4) : std::nullopt;
        m.nodes.push_back(Node::gateway(id, g, decision));
      }
    }
  }

  auto can_source = [&](const Node& x) { return options.any_degree || !x.is_event(EventPosition::end); };
  auto can_target = [&](const Node& x) { return options.any_degree || !x.is_event(EventPosition::start); };
  std::vector<std::size_t> sources, targets;
  auto refresh = [&] {
    sources.clear();
    targets.clear();
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      if (can_source(m.nodes[i])) sources.push_back(i);
      if (can_target(m.nodes[i])) targets.push_back(i);
    }
  };
  refresh();
  const bool flows = s.contains(E::sequence_flow);
  auto needs = [&](const Node& x) {
    return !options.any_degree && (x.is_event(EventPosition::end) || x.is_event(EventPosition::intermediate));
  };
  if (flows) {
    // Guarantee eligible partners exist for every event that needs an edge.
    bool need_source = false, need_target = false;
    for (const Node& x : m.nodes) {
      need_source = need_source || needs(x);
      need_target = need_target || x.is_event(EventPosition::intermediate);
    }
    if ((need_source && sources.empty()) || (need_target && targets.empty())) {
      m.nodes.push_back(Node::task(random_identifier(rng, ids), random_label(rng)));
      refresh();
    }
  } else if (!options.any_degree) {
    // Without flows the degree constraints cannot hold; keep only start events and tasks.
    std::erase_if(m.nodes, [](const Node& x) {
      return x.is_event(EventPosition::end) || x.is_event(EventPosition::intermediate);
    });
    refresh();
  }

  auto add_flow = [&](std::size_t a, std::size_t b) {
    std::optional<std::string> cond = s.contains(E::condition) ? random_label(rng, 0.3) : std::nullopt;
    m.sequence_flows.push_back({random_identifier(rng, ids), m.nodes[a].id, m.nodes[b].id, cond});
  };
  if (flows && !m.nodes.empty()) {
    std::vector<int> in(m.nodes.size()), out(m.nodes.size());
    const int extra = sources.empty() || targets.empty() ? 0 : rng.uniform(0, options.max_extra_flows);
    for (int i = 0; i < extra; ++i) {
      std::size_t a = rng.pick(sources), b = rng.pick(targets);
      add_flow(a, b);
      ++out[a], ++in[b];
    }
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      const Node& x = m.nodes[i];
      if (needs(x) && in[i] == 0) {
        std::size_t a = rng.pick(sources);
        add_flow(a, i);
        ++out[a], ++in[i];
      }
      if (!options.any_degree && x.is_event(EventPosition::intermediate) && out[i] == 0) {
        std::size_t b = rng.pick(targets);
        add_flow(i, b);
        ++out[i], ++in[b];
      }
    }
  }

  if (s.contains(E::pool) && !m.nodes.empty() && rng.chance(0.5)) {
    std::vector<std::string> free;
    for (const Node& x : m.nodes) free.push_back(x.id);
    rng.shuffle(free);
    const int pools = rng.uniform(1, 3);
    for (int p = 0; p < pools; ++p) {
      Pool pool{random_identifier(rng, ids), rng.pick(label_pool()), {}, {}};
      const int lanes = s.contains(E::lane) ? rng.uniform(0, 2) : 0;
      for (int l = 0; l < lanes; ++l) pool.lanes.push_back({random_identifier(rng, ids), rng.pick(label_pool()), {}});
      const int take = free.empty() ? 0 : rng.uniform(0, static_cast<int>(free.size()));
      for (int k = 0; k < take; ++k) {
        std::string id = free.back();
        free.pop_back();
        if (!pool.lanes.empty() && rng.chance(0.8))
          pool.lanes[static_cast<std::size_t>(rng.uniform(0, static_cast<int>(pool.lanes.size()) - 1))].members.push_back(id);
        else
          pool.members.push_back(id);
      }
      m.pools.push_back(std::move(pool));
    }
    if (s.contains(E::message_flow)) {
      auto where = placements(m);
      std::vector<std::pair<std::string, std::string>> candidates;
      for (const auto& [a, pa] : where)
        for (const auto& [b, pb] : where)
          if (pa.pool != pb.pool) candidates.emplace_back(a, b);
      std::sort(candidates.begin(), candidates.end());
      const int count = candidates.empty() ? 0 : rng.uniform(0, 3);
      for (int i = 0; i < count; ++i) {
        auto [a, b] = rng.pick(candidates);
        m.message_flows.push_back({random_identifier(rng, ids), a, b, random_label(rng, 0.5)});
      }
    }
  }
  rng.shuffle(m.nodes);
  rng.shuffle(m.sequence_flows);
  return m;
}

/// Same model with every identifier renamed and every collection reordered.
inline ProcessModel rename_and_shuffle(const ProcessModel& m, Rng& rng) {
  IdAllocator ids;
  std::map<std::string, std::string> to;
  auto fresh = [&](const std::string& old) {
    std::string id = ids.next("r" + std::to_string(rng.uniform(0, 9)));
    to[old] = id;
    return id;
  };
  ProcessModel r = m;
  for (Node& n : r.nodes) n.id = fresh(n.id);
  for (SequenceFlow& f : r.sequence_flows) {
    f.id = fresh(f.id);
    f.source = to.at(f.source);
    f.target = to.at(f.target);
  }
  for (Pool& p : r.pools) {
    p.id = fresh(p.id);
    for (std::string& x : p.members) x = to.at(x);
    for (Lane& l : p.lanes) {
      l.id = fresh(l.id);
      for (std::string& x : l.members) x = to.at(x);
    }
  }
  for (MessageFlow& f : r.message_flows) {
    f.id = fresh(f.id);
    f.source = to.at(f.source);
    f.target = to.at(f.target);
  }
  rng.shuffle(r.nodes);
  rng.shuffle(r.sequence_flows);
  rng.shuffle(r.pools);
  rng.shuffle(r.message_flows);
  return r;
}

struct TreeOptions {
  bool conditions = true;
  bool decisions = true;
  bool intermediate_events = true;
  bool marker_labels = true;
  bool empty_parallel_branches = true;
  int max_depth = 3;
  int max_steps = 4;
};

inline TreeOptions tree_options_for(PmrId pmr) {
  TreeOptions o;
  if (pmr == PmrId::powl_code || pmr == PmrId::bpmn_text || pmr == PmrId::json_branches) {
    o.intermediate_events = false;
    o.marker_labels = false;
  }
  if (pmr == PmrId::powl_code) {
    o.conditions = false;
    o.decisions = false;
    o.empty_parallel_branches = false;
  }
  return o;
}

namespace detail {

inline std::vector<BranchTree> random_steps(Rng& rng, const TreeOptions& o, int depth, bool allow_empty);

inline Branch random_branch(Rng& rng, const TreeOptions& o, int depth, bool conditional, bool allow_empty) {
  Branch b;
  if (conditional && o.conditions) b.condition = random_label(rng, 0.6);
  b.steps = random_steps(rng, o, depth, allow_empty);
  return b;
}

inline BranchTree random_step(Rng& rng, const TreeOptions& o, int depth) {
  int roll = depth >= o.max_depth ? 0 : rng.uniform(0, 9);
  if (roll <= 4) {
    if (o.intermediate_events && rng.chance(0.15))
      return BranchTree::event(EventPosition::intermediate, random_label(rng, 0.5));
    return BranchTree::activity(random_label(rng, 0.9));
  }
  std::optional<std::string> decision = o.decisions ? random_label(rng, 0.4) : std::nullopt;
  if (roll <= 6) {
    std::vector<Branch> bs;
    const int k = rng.uniform(2, 3);
    for (int i = 0; i < k; ++i) bs.push_back(random_branch(rng, o, depth + 1, true, true));
    return BranchTree::exclusive(std::move(bs), decision);
  }
  if (roll <= 8) {
    std::vector<Branch> bs;
    const int k = rng.uniform(2, 3);
    for (int i = 0; i < k; ++i) bs.push_back(random_branch(rng, o, depth + 1, false, o.empty_parallel_branches));
    return BranchTree::parallel(std::move(bs));
  }
  Branch body = random_branch(rng, o, depth + 1, true, true);
  std::optional<Branch> redo;
  if (rng.chance(0.7)) redo = random_branch(rng, o, depth + 1, true, true);
  return BranchTree::loop(std::move(body), std::move(redo), decision);
}

inline std::vector<BranchTree> random_steps(Rng& rng, const TreeOptions& o, int depth, bool allow_empty) {
  const int n = rng.uniform(allow_empty ? 0 : 1, o.max_steps);
  std::vector<BranchTree> steps;
  for (int i = 0; i < n; ++i) steps.push_back(random_step(rng, o, depth));
  if (n > 0 && rng.chance(0.1)) {
    // Occasionally nest a sequence to exercise flattening.
    std::vector<BranchTree> inner(steps.begin(), steps.end());
    return {BranchTree::sequence(std::move(inner))};
  }
  return steps;
}

}  // namespace detail

/// A random tree honoring the BranchTree invariants (nested sequences are allowed before
/// canonicalization).
inline BranchTree random_tree(Rng& rng, const TreeOptions& o = {}) {
  std::vector<BranchTree> children;
  if (rng.chance(0.5)) children.push_back(BranchTree::event(EventPosition::start, o.marker_labels ? random_label(rng, 0.7) : std::nullopt));
  for (BranchTree& s : detail::random_steps(rng, o, 0, true)) children.push_back(std::move(s));
  if (rng.chance(0.5)) children.push_back(BranchTree::event(EventPosition::end, o.marker_labels ? random_label(rng, 0.7) : std::nullopt));
  return BranchTree::sequence(std::move(children));
}

}  // namespace pmrkit::testing
