#include "pmrkit/model.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>

namespace pmrkit {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::task: return "task";
    case NodeKind::event: return "event";
    case NodeKind::gateway: return "gateway";
  }
  return "?";
}

std::string_view to_string(EventPosition position) {
  switch (position) {
    case EventPosition::start: return "start";
    case EventPosition::intermediate: return "intermediate";
    case EventPosition::end: return "end";
  }
  return "?";
}

std::string_view to_string(GatewayType type) {
  return type == GatewayType::exclusive ? "exclusive" : "parallel";
}

std::optional<EventPosition> event_position_from_string(std::string_view text) {
  if (text == "start") return EventPosition::start;
  if (text == "intermediate") return EventPosition::intermediate;
  if (text == "end") return EventPosition::end;
  return std::nullopt;
}

std::optional<GatewayType> gateway_type_from_string(std::string_view text) {
  if (text == "exclusive") return GatewayType::exclusive;
  if (text == "parallel") return GatewayType::parallel;
  return std::nullopt;
}

Node Node::task(std::string id, std::optional<std::string> label) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::task;
  n.label = std::move(label);
  return n;
}

Node Node::event(std::string id, EventPosition position, std::optional<std::string> label) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::event;
  n.position = position;
  n.label = std::move(label);
  return n;
}

Node Node::gateway(std::string id, GatewayType type, std::optional<std::string> decision) {
  Node n;
  n.id = std::move(id);
  n.kind = NodeKind::gateway;
  n.gateway_type = type;
  n.label = std::move(decision);
  return n;
}

const Node* ProcessModel::find_node(std::string_view node_id) const {
  for (const Node& n : nodes)
    if (n.id == node_id) return &n;
  return nullptr;
}

std::unordered_map<std::string, Placement> placements(const ProcessModel& model) {
  std::unordered_map<std::string, Placement> out;
  for (std::size_t p = 0; p < model.pools.size(); ++p) {
    const Pool& pool = model.pools[p];
    for (const std::string& m : pool.members) out.try_emplace(m, Placement{p, std::nullopt});
    for (std::size_t l = 0; l < pool.lanes.size(); ++l)
      for (const std::string& m : pool.lanes[l].members) out.try_emplace(m, Placement{p, l});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::array<std::string_view, kElementTypeCount> kElementTypeNames = {
    "task",          "start_event", "intermediate_event", "end_event", "exclusive_gateway", "parallel_gateway",
    "sequence_flow", "condition",   "decision",           "pool",      "lane",              "message_flow",
};
}  // namespace

std::string_view to_string(ElementType type) { return kElementTypeNames[static_cast<std::size_t>(type)]; }

std::optional<ElementType> element_type_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kElementTypeNames.size(); ++i)
    if (kElementTypeNames[i] == text) return kAllElementTypes[i];
  return std::nullopt;
}

ElementType element_type(const Node& node) {
  switch (node.kind) {
    case NodeKind::task: return ElementType::task;
    case NodeKind::event:
      switch (node.position) {
        case EventPosition::start: return ElementType::start_event;
        case EventPosition::intermediate: return ElementType::intermediate_event;
        case EventPosition::end: return ElementType::end_event;
      }
      break;
    case NodeKind::gateway:
      return node.gateway_type == GatewayType::exclusive ? ElementType::exclusive_gateway
                                                         : ElementType::parallel_gateway;
  }
  return ElementType::task;
}

long ElementCounts::events() const {
  return (*this)[ElementType::start_event] + (*this)[ElementType::intermediate_event] +
         (*this)[ElementType::end_event];
}

long ElementCounts::gateways() const {
  return (*this)[ElementType::exclusive_gateway] + (*this)[ElementType::parallel_gateway];
}

long ElementCounts::nodes() const { return (*this)[ElementType::task] + events() + gateways(); }

long ElementCounts::swimlanes() const { return (*this)[ElementType::pool] + (*this)[ElementType::lane]; }

long ElementCounts::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

ElementCounts ElementCounts::operator-(const ElementCounts& other) const {
  ElementCounts out;
  for (std::size_t i = 0; i < kElementTypeCount; ++i) out.counts_[i] = counts_[i] - other.counts_[i];
  return out;
}

ElementCounts count_elements(const ProcessModel& model) {
  ElementCounts c;
  for (const Node& n : model.nodes) {
    ++c[element_type(n)];
    if (n.kind == NodeKind::gateway && clean_label(n.label)) ++c[ElementType::decision];
  }
  for (const SequenceFlow& f : model.sequence_flows) {
    ++c[ElementType::sequence_flow];
    if (clean_label(f.condition)) ++c[ElementType::condition];
  }
  for (const Pool& p : model.pools) {
    ++c[ElementType::pool];
    c[ElementType::lane] += static_cast<long>(p.lanes.size());
  }
  c[ElementType::message_flow] = static_cast<long>(model.message_flows.size());
  return c;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::duplicate_id: return "duplicate_id";
    case Violation::Kind::invalid_identifier: return "invalid_identifier";
    case Violation::Kind::dangling_reference: return "dangling_reference";
    case Violation::Kind::message_flow_within_pool: return "message_flow_within_pool";
    case Violation::Kind::multiple_lane_assignment: return "multiple_lane_assignment";
  }
  return "?";
}

bool is_valid_identifier(std::string_view id) {
  if (id.empty()) return false;
  auto head = static_cast<unsigned char>(id.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(id.begin() + 1, id.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::vector<Violation> validate(const ProcessModel& model) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  auto check_id = [&](const std::string& id) {
    if (!is_valid_identifier(id))
      out.push_back({Violation::Kind::invalid_identifier, id, "identifier '" + id + "' is not in the id alphabet"});
    if (!seen.insert(id).second)
      out.push_back({Violation::Kind::duplicate_id, id, "identifier '" + id + "' is used more than once"});
  };
  for (const Node& n : model.nodes) check_id(n.id);
  for (const SequenceFlow& f : model.sequence_flows) check_id(f.id);
  for (const Pool& p : model.pools) {
    check_id(p.id);
    for (const Lane& l : p.lanes) check_id(l.id);
  }
  for (const MessageFlow& f : model.message_flows) check_id(f.id);

  std::set<std::string> node_ids;
  for (const Node& n : model.nodes) node_ids.insert(n.id);
  auto check_ref = [&](const std::string& owner, const std::string& ref) {
    if (!node_ids.count(ref))
      out.push_back({Violation::Kind::dangling_reference, owner, "'" + owner + "' references unknown node '" + ref + "'"});
  };
  for (const SequenceFlow& f : model.sequence_flows) {
    check_ref(f.id, f.source);
    check_ref(f.id, f.target);
  }

  std::map<std::string, std::string> owner_of;  // node -> lane/pool id that claims it
  for (const Pool& p : model.pools) {
    auto claim = [&](const std::string& container, const std::string& member) {
      check_ref(container, member);
      auto [it, inserted] = owner_of.emplace(member, container);
      if (!inserted)
        out.push_back({Violation::Kind::multiple_lane_assignment, member,
                       "node '" + member + "' is assigned to both '" + it->second + "' and '" + container + "'"});
    };
    for (const std::string& m : p.members) claim(p.id, m);
    for (const Lane& l : p.lanes)
      for (const std::string& m : l.members) claim(l.id, m);
  }

  auto where = placements(model);
  for (const MessageFlow& f : model.message_flows) {
    check_ref(f.id, f.source);
    check_ref(f.id, f.target);
    if (model.pools.empty()) continue;
    auto a = where.find(f.source);
    auto b = where.find(f.target);
    if (a != where.end() && b != where.end() && a->second.pool == b->second.pool)
      out.push_back({Violation::Kind::message_flow_within_pool, f.id,
                     "message flow '" + f.id + "' connects two nodes of the same pool"});
  }
  return out;
}

std::string IdAllocator::make(std::string_view base, bool strict) {
  std::string id;
  for (char ch : base) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '_' || (!strict && c == '-'))
      id += ch;
    else if (!id.empty() && id.back() != '_')
      id += '_';
  }
  while (!id.empty() && id.back() == '_' && id.size() > 1) id.pop_back();
  if (id.empty() || id == "_") id = "n";
  if (std::isdigit(static_cast<unsigned char>(id.front())) || id.front() == '-') id.insert(0, "n_");
  if (used_.insert(id).second) return id;
  for (std::size_t k = 2;; ++k) {
    std::string candidate = id + "_" + std::to_string(k);
    if (used_.insert(candidate).second) return candidate;
  }
}

std::string IdAllocator::next(std::string_view prefix) {
  auto it = counters_.find(prefix);
  if (it == counters_.end()) it = counters_.emplace(std::string(prefix), 0).first;
  for (;;) {
    std::string candidate = std::string(prefix) + "_" + std::to_string(++it->second);
    if (used_.insert(candidate).second) return candidate;
  }
}

// ---------------------------------------------------------------------------

std::string normalize_label(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += ch;
  }
  return out;
}

std::optional<std::string> clean_label(const std::optional<std::string>& label) {
  if (!label) return std::nullopt;
  std::string n = normalize_label(*label);
  if (n.empty()) return std::nullopt;
  return n;
}

namespace {

std::string label_key(const std::optional<std::string>& label) {
  auto c = clean_label(label);
  return c ? *c : std::string();
}

/// Index-based view of one model used by the isomorphism search.
struct Indexed {
  const ProcessModel* model = nullptr;
  std::unordered_map<std::string, int> index;
  // (source, target) -> sorted normalized conditions (one entry per parallel edge).
  std::map<std::pair<int, int>, std::vector<std::string>> seq;
  std::map<std::pair<int, int>, std::vector<std::string>> msg;
  std::vector<std::vector<std::pair<int, std::string>>> out_seq, in_seq, out_msg, in_msg;
  std::vector<std::string> base_signature;

  explicit Indexed(const ProcessModel& m) : model(&m) {
    const int n = static_cast<int>(m.nodes.size());
    for (int i = 0; i < n; ++i) index.emplace(m.nodes[i].id, i);
    out_seq.resize(n);
    in_seq.resize(n);
    out_msg.resize(n);
    in_msg.resize(n);
    for (const SequenceFlow& f : m.sequence_flows) {
      int s = index.at(f.source), t = index.at(f.target);
      std::string c = label_key(f.condition);
      seq[{s, t}].push_back(c);
      out_seq[s].emplace_back(t, c);
      in_seq[t].emplace_back(s, c);
    }
    for (const MessageFlow& f : m.message_flows) {
      int s = index.at(f.source), t = index.at(f.target);
      std::string c = label_key(f.label);
      msg[{s, t}].push_back(c);
      out_msg[s].emplace_back(t, c);
      in_msg[t].emplace_back(s, c);
    }
    for (auto& [k, v] : seq) std::sort(v.begin(), v.end());
    for (auto& [k, v] : msg) std::sort(v.begin(), v.end());

    auto where = placements(m);
    base_signature.resize(n);
    for (int i = 0; i < n; ++i) {
      const Node& node = m.nodes[i];
      std::string sig(to_string(element_type(node)));
      sig += '\x1f';
      sig += label_key(node.label);
      sig += '\x1f';
      auto it = where.find(node.id);
      if (it != where.end()) {
        const Pool& pool = m.pools[*it->second.pool];
        sig += "P:" + normalize_label(pool.name);
        if (it->second.lane) sig += "|L:" + normalize_label(pool.lanes[*it->second.lane].name);
      }
      base_signature[i] = std::move(sig);
    }
  }

  const std::vector<std::string>* edges(const std::map<std::pair<int, int>, std::vector<std::string>>& m, int s,
                                        int t) const {
    auto it = m.find({s, t});
    return it == m.end() ? nullptr : &it->second;
  }
};

bool same_edges(const std::vector<std::string>* a, const std::vector<std::string>* b) {
  if (!a || !b) return a == b || (a ? a->empty() : b->empty());
  return *a == *b;
}

/// Colour refinement run jointly over both models so colours are comparable.
void refine(const Indexed& a, const Indexed& b, std::vector<int>& ca, std::vector<int>& cb) {
  auto assign = [&](const std::vector<std::string>& sa, const std::vector<std::string>& sb) {
    std::vector<std::string> all(sa);
    all.insert(all.end(), sb.begin(), sb.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    auto lookup = [&](const std::string& s) {
      return static_cast<int>(std::lower_bound(all.begin(), all.end(), s) - all.begin());
    };
    ca.resize(sa.size());
    cb.resize(sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) ca[i] = lookup(sa[i]);
    for (std::size_t i = 0; i < sb.size(); ++i) cb[i] = lookup(sb[i]);
    return all.size();
  };

  std::size_t classes = assign(a.base_signature, b.base_signature);
  auto signatures = [](const Indexed& x, const std::vector<int>& colour) {
    std::vector<std::string> out(colour.size());
    auto render = [&](const std::vector<std::pair<int, std::string>>& adj, char tag) {
      std::vector<std::string> parts;
      parts.reserve(adj.size());
      for (const auto& [other, cond] : adj) parts.push_back(std::to_string(colour[other]) + ':' + cond);
      std::sort(parts.begin(), parts.end());
      std::string s(1, tag);
      for (const auto& p : parts) s += p + '\x1e';
      return s;
    };
    for (std::size_t i = 0; i < colour.size(); ++i) {
      out[i] = std::to_string(colour[i]) + render(x.out_seq[i], 'o') + render(x.in_seq[i], 'i') +
               render(x.out_msg[i], 'O') + render(x.in_msg[i], 'I');
    }
    return out;
  };
  for (std::size_t round = 0; round < ca.size() + 1; ++round) {
    std::size_t next = assign(signatures(a, ca), signatures(b, cb));
    if (next == classes) break;
    classes = next;
  }
}

class Matcher {
 public:
  Matcher(const Indexed& a, const Indexed& b, std::vector<int> ca, std::vector<int> cb)
      : a_(a), b_(b), ca_(std::move(ca)), cb_(std::move(cb)) {
    const std::size_t n = ca_.size();
    map_.assign(n, -1);
    used_.assign(n, false);
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::map<int, int> class_size;
    for (int c : ca_) ++class_size[c];
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int x, int y) { return class_size[ca_[x]] < class_size[ca_[y]]; });
  }

  bool solve(std::size_t depth = 0) {
    if (depth == order_.size()) return pools_match();
    const int x = order_[depth];
    for (std::size_t y = 0; y < cb_.size(); ++y) {
      if (used_[y] || cb_[y] != ca_[x]) continue;
      if (!consistent(x, static_cast<int>(y), depth)) continue;
      map_[x] = static_cast<int>(y);
      used_[y] = true;
      if (solve(depth + 1)) return true;
      map_[x] = -1;
      used_[y] = false;
    }
    return false;
  }

 private:
  bool consistent(int x, int y, std::size_t depth) const {
    if (!same_edges(a_.edges(a_.seq, x, x), b_.edges(b_.seq, y, y))) return false;
    if (!same_edges(a_.edges(a_.msg, x, x), b_.edges(b_.msg, y, y))) return false;
    for (std::size_t k = 0; k < depth; ++k) {
      const int u = order_[k];
      const int v = map_[u];
      if (!same_edges(a_.edges(a_.seq, x, u), b_.edges(b_.seq, y, v))) return false;
      if (!same_edges(a_.edges(a_.seq, u, x), b_.edges(b_.seq, v, y))) return false;
      if (!same_edges(a_.edges(a_.msg, x, u), b_.edges(b_.msg, y, v))) return false;
      if (!same_edges(a_.edges(a_.msg, u, x), b_.edges(b_.msg, v, y))) return false;
    }
    return true;
  }

  // Pools and lanes compared as multisets, with lane membership expressed in b's node indices.
  bool pools_match() const {
    auto describe = [](const Indexed& x, const std::function<int(int)>& to_b) {
      std::vector<std::string> pools;
      for (const Pool& p : x.model->pools) {
        auto members = [&](const std::vector<std::string>& ids) {
          std::vector<int> m;
          for (const auto& id : ids) m.push_back(to_b(x.index.at(id)));
          std::sort(m.begin(), m.end());
          std::string s;
          for (int v : m) s += std::to_string(v) + ',';
          return s;
        };
        std::vector<std::string> lanes;
        for (const Lane& l : p.lanes) lanes.push_back(normalize_label(l.name) + '\x1f' + members(l.members));
        std::sort(lanes.begin(), lanes.end());
        std::string s = normalize_label(p.name) + '\x1d' + members(p.members) + '\x1d';
        for (const auto& l : lanes) s += l + '\x1e';
        pools.push_back(std::move(s));
      }
      std::sort(pools.begin(), pools.end());
      return pools;
    };
    return describe(a_, [&](int i) { return map_[i]; }) == describe(b_, [](int i) { return i; });
  }

  const Indexed& a_;
  const Indexed& b_;
  std::vector<int> ca_, cb_;
  std::vector<int> map_;
  std::vector<bool> used_;
  std::vector<int> order_;
};

}  // namespace

bool canonical_equal(const ProcessModel& a, const ProcessModel& b) {
  if (a.nodes.size() != b.nodes.size() || a.sequence_flows.size() != b.sequence_flows.size() ||
      a.message_flows.size() != b.message_flows.size() || a.pools.size() != b.pools.size())
    return false;
  std::size_t lanes_a = 0, lanes_b = 0;
  for (const Pool& p : a.pools) lanes_a += p.lanes.size();
  for (const Pool& p : b.pools) lanes_b += p.lanes.size();
  if (lanes_a != lanes_b) return false;

  Indexed ia(a), ib(b);
  std::vector<int> ca, cb;
  refine(ia, ib, ca, cb);
  std::vector<int> ha(ca), hb(cb);
  std::sort(ha.begin(), ha.end());
  std::sort(hb.begin(), hb.end());
  if (ha != hb) return false;

  Matcher matcher(ia, ib, std::move(ca), std::move(cb));
  return matcher.solve();
}

// ---------------------------------------------------------------------------

ProcessModel bypass_nodes(const ProcessModel& model, const std::set<std::string>& node_ids) {
  if (node_ids.empty()) return model;
  ProcessModel out = model;
  IdAllocator ids;
  for (const Node& n : model.nodes) ids.reserve(n.id);
  for (const SequenceFlow& f : model.sequence_flows) ids.reserve(f.id);
  for (const Pool& p : model.pools) {
    ids.reserve(p.id);
    for (const Lane& l : p.lanes) ids.reserve(l.id);
  }
  for (const MessageFlow& f : model.message_flows) ids.reserve(f.id);

  for (const std::string& victim : node_ids) {
    std::vector<SequenceFlow> incoming, outgoing, kept;
    for (SequenceFlow& f : out.sequence_flows) {
      bool from = f.source == victim, to = f.target == victim;
      if (from && to) continue;
      if (to)
        incoming.push_back(std::move(f));
      else if (from)
        outgoing.push_back(std::move(f));
      else
        kept.push_back(std::move(f));
    }
    for (const SequenceFlow& in : incoming) {
      for (const SequenceFlow& o : outgoing) {
        SequenceFlow f;
        f.id = ids.next("flow");
        f.source = in.source;
        f.target = o.target;
        f.condition = in.condition ? in.condition : o.condition;
        kept.push_back(std::move(f));
      }
    }
    out.sequence_flows = std::move(kept);
  }

  std::erase_if(out.nodes, [&](const Node& n) { return node_ids.count(n.id) != 0; });
  std::erase_if(out.message_flows, [&](const MessageFlow& f) {
    return node_ids.count(f.source) != 0 || node_ids.count(f.target) != 0;
  });
  for (Pool& p : out.pools) {
    std::erase_if(p.members, [&](const std::string& m) { return node_ids.count(m) != 0; });
    for (Lane& l : p.lanes)
      std::erase_if(l.members, [&](const std::string& m) { return node_ids.count(m) != 0; });
  }
  return out;
}

ProcessModel restrict_to(const ProcessModel& model, const ElementTypeSet& supported, std::vector<Loss>* losses) {
  auto lose = [&](ElementType t, const std::string& id, std::string reason) {
    if (losses) losses->push_back({t, id, std::move(reason)});
  };
  std::set<std::string> victims;
  for (const Node& n : model.nodes) {
    ElementType t = element_type(n);
    if (!supported.contains(t)) {
      victims.insert(n.id);
      lose(t, n.id, "element type not representable");
    }
  }
  for (const MessageFlow& f : model.message_flows) {
    if (!supported.contains(ElementType::message_flow) &&
        (victims.count(f.source) == 0 && victims.count(f.target) == 0))
      lose(ElementType::message_flow, f.id, "element type not representable");
  }
  ProcessModel out = bypass_nodes(model, victims);

  if (!supported.contains(ElementType::decision)) {
    for (Node& n : out.nodes) {
      if (n.kind == NodeKind::gateway && clean_label(n.label)) {
        lose(ElementType::decision, n.id, "gateway label not representable");
        n.label.reset();
      }
    }
  }
  if (!supported.contains(ElementType::condition)) {
    for (SequenceFlow& f : out.sequence_flows) {
      if (clean_label(f.condition)) {
        lose(ElementType::condition, f.id, "flow condition not representable");
        f.condition.reset();
      }
    }
  }
  if (!supported.contains(ElementType::message_flow)) out.message_flows.clear();
  if (!supported.contains(ElementType::lane)) {
    for (Pool& p : out.pools) {
      for (Lane& l : p.lanes) {
        lose(ElementType::lane, l.id, "element type not representable");
        p.members.insert(p.members.end(), l.members.begin(), l.members.end());
      }
      p.lanes.clear();
    }
  }
  if (!supported.contains(ElementType::pool)) {
    for (const Pool& p : out.pools) lose(ElementType::pool, p.id, "element type not representable");
    out.pools.clear();
  }
  return out;
}

}  // namespace pmrkit
