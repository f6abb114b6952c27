#include "pmrkit/bpmn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include "pmrkit/errors.hpp"

namespace pmrkit::bpmn {

BpmnDocument make_document(std::string xml_text, std::optional<std::string> source_path) {
  BpmnDocument doc;
  doc.has_diagram_section = xml_text.find(":BPMNDiagram") != std::string::npos ||
                            xml_text.find("<BPMNDiagram") != std::string::npos;
  doc.xml_text = std::move(xml_text);
  doc.source_path = std::move(source_path);
  return doc;
}

// ---------------------------------------------------------------------------
// Reading

namespace {

const std::set<std::string_view> kTaskElements = {
    "task",       "userTask",        "serviceTask", "manualTask", "scriptTask",
    "sendTask",   "receiveTask",     "businessRuleTask", "callActivity",
};
const std::set<std::string_view> kCollapsedElements = {"subProcess", "transaction", "adHocSubProcess"};
const std::set<std::string_view> kUnsupportedGateways = {"inclusiveGateway", "eventBasedGateway", "complexGateway"};
const std::set<std::string_view> kIgnoredChildren = {"extensionElements", "documentation", "incoming", "outgoing"};

class Reader {
 public:
  ReadResult run(const xml::Element& root) {
    if (root.local_name() != "definitions")
      throw ParseError("root element is <" + root.name + ">, not <definitions>", root.line, root.column,
                       "<definitions>");

    // Participants first so processes know which pool they belong to.
    std::map<std::string, std::size_t> pool_of_process;
    for (const xml::Element& c : root.children) {
      if (c.local_name() != "collaboration") continue;
      for (const xml::Element& p : c.children) {
        if (p.local_name() != "participant") continue;
        Pool pool;
        pool.id = take_id(p);
        pool.name = p.optional_attribute("name").value_or("");
        if (auto ref = p.optional_attribute("processRef")) pool_of_process[*ref] = result_.model.pools.size();
        result_.model.pools.push_back(std::move(pool));
      }
    }

    std::size_t process_count = 0;
    for (const xml::Element& c : root.children) {
      if (c.local_name() != "process") continue;
      ++process_count;
      std::optional<std::size_t> pool;
      if (auto id = c.optional_attribute("id"); id && pool_of_process.count(*id)) pool = pool_of_process[*id];
      read_process(c, pool);
      if (process_count == 1) {
        if (auto id = c.optional_attribute("id"); id && is_valid_identifier(*id)) result_.model.id = *id;
        if (auto name = c.optional_attribute("name"); name && !name->empty()) result_.model.name = *name;
      }
    }

    for (const xml::Element& c : root.children) {
      std::string_view local = c.local_name();
      if (local == "collaboration") {
        for (const xml::Element& m : c.children)
          if (m.local_name() == "messageFlow") read_message_flow(m);
      } else if (local == "BPMNDiagram") {
        note(c, "diagram interchange section is not part of the canonical model");
      } else if (local != "process") {
        note(c, "top-level element not modeled");
      }
    }

    resolve_flows();
    return std::move(result_);
  }

 private:
  void note(const xml::Element& e, std::string reason) {
    result_.skipped.push_back({e.optional_attribute("id").value_or(""), std::string(e.local_name()), std::move(reason)});
  }

  /// Registers the element's id in the canonical alphabet, renaming if needed.
  std::string take_id(const xml::Element& e) {
    std::string original = e.optional_attribute("id").value_or("");
    std::string id = (is_valid_identifier(original) && !ids_.contains(original)) ? original : ids_.make(original);
    ids_.reserve(id);
    if (!original.empty() && !renamed_.count(original)) renamed_[original] = id;
    return id;
  }

  void read_process(const xml::Element& process, std::optional<std::size_t> pool) {
    std::vector<std::string> process_nodes;
    std::vector<std::pair<std::string, std::vector<std::string>>> lanes;  // lane name/id -> refs

    for (const xml::Element& c : process.children) {
      std::string_view local = c.local_name();
      if (kTaskElements.count(local) || kCollapsedElements.count(local)) {
        if (kCollapsedElements.count(local)) note(c, "sub-process collapsed into a task");
        add_node(Node::task(take_id(c), label_of(c)), process_nodes, c);
      } else if (local == "startEvent" || local == "endEvent" || local == "intermediateThrowEvent" ||
                 local == "intermediateCatchEvent") {
        EventPosition pos = local == "startEvent"  ? EventPosition::start
                            : local == "endEvent" ? EventPosition::end
                                                  : EventPosition::intermediate;
        for (const xml::Element& d : c.children)
          if (d.local_name().ends_with("EventDefinition")) note(d, "event subtype ignored");
        add_node(Node::event(take_id(c), pos, label_of(c)), process_nodes, c);
      } else if (local == "exclusiveGateway" || local == "parallelGateway") {
        GatewayType type = local == "exclusiveGateway" ? GatewayType::exclusive : GatewayType::parallel;
        add_node(Node::gateway(take_id(c), type, label_of(c)), process_nodes, c);
      } else if (kUnsupportedGateways.count(local)) {
        throw UnsupportedElementError(c.optional_attribute("id").value_or("?"),
                                      std::string(local) + " is not a supported gateway kind");
      } else if (local == "sequenceFlow") {
        pending_flows_.push_back(&c);
      } else if (local == "laneSet") {
        collect_lanes(c, lanes);
      } else if (local == "boundaryEvent") {
        note(c, "boundary events are not modeled");
      } else if (!kIgnoredChildren.count(local)) {
        note(c, "element kind not modeled; preserved verbatim");
        std::optional<std::string> pool_id;
        if (pool) pool_id = result_.model.pools[*pool].id;
        result_.preserved.push_back({pool_id, c});
      }
    }

    if (lanes.empty() && !pool) return;
    if (!pool) {
      // Lanes need an owning pool; the process itself plays that role.
      note(process, "lanes outside a participant; process promoted to a pool");
      Pool p;
      p.id = take_id(process);
      p.name = process.optional_attribute("name").value_or("");
      result_.model.pools.push_back(std::move(p));
      pool = result_.model.pools.size() - 1;
    }
    Pool& target = result_.model.pools[*pool];
    std::set<std::string> placed;
    for (auto& [name_and_id, refs] : lanes) {
      Lane lane;
      auto sep = name_and_id.find('\x1f');
      lane.name = name_and_id.substr(0, sep);
      lane.id = name_and_id.substr(sep + 1);
      for (const std::string& r : refs) {
        auto it = renamed_.find(r);
        if (it == renamed_.end() || !node_ids_.count(it->second)) continue;
        if (placed.insert(it->second).second) lane.members.push_back(it->second);
      }
      target.lanes.push_back(std::move(lane));
    }
    for (const std::string& n : process_nodes)
      if (!placed.count(n)) target.members.push_back(n);
  }

  void collect_lanes(const xml::Element& lane_set, std::vector<std::pair<std::string, std::vector<std::string>>>& out) {
    for (const xml::Element& lane : lane_set.children) {
      if (lane.local_name() != "lane") continue;
      if (const xml::Element* nested = lane.child("childLaneSet"); nested && !nested->children.empty()) {
        note(lane, "nested lane flattened into its child lanes");
        collect_lanes(*nested, out);
        continue;
      }
      std::vector<std::string> refs;
      for (const xml::Element& r : lane.children)
        if (r.local_name() == "flowNodeRef") refs.push_back(normalize_label(r.text));
      std::string id = take_id(lane);
      out.emplace_back(lane.optional_attribute("name").value_or("") + '\x1f' + id, std::move(refs));
    }
  }

  static std::optional<std::string> label_of(const xml::Element& e) {
    auto name = e.optional_attribute("name");
    if (name && normalize_label(*name).empty()) return std::nullopt;
    return name;
  }

  void add_node(Node node, std::vector<std::string>& process_nodes, const xml::Element&) {
    node_ids_.insert(node.id);
    process_nodes.push_back(node.id);
    result_.model.nodes.push_back(std::move(node));
  }

  std::optional<std::string> resolve(const std::string* ref) const {
    if (!ref) return std::nullopt;
    auto it = renamed_.find(*ref);
    if (it == renamed_.end() || !node_ids_.count(it->second)) return std::nullopt;
    return it->second;
  }

  void resolve_flows() {
    for (const xml::Element* f : pending_flows_) {
      auto source = resolve(f->attribute("sourceRef"));
      auto target = resolve(f->attribute("targetRef"));
      if (!source || !target) {
        note(*f, "sequence flow endpoint is not a modeled node");
        continue;
      }
      SequenceFlow flow;
      flow.id = take_id(*f);
      flow.source = *source;
      flow.target = *target;
      if (auto name = f->optional_attribute("name"); name && !normalize_label(*name).empty()) {
        flow.condition = *name;
      } else if (const xml::Element* expr = f->child("conditionExpression")) {
        std::string text = normalize_label(expr->text);
        if (!text.empty()) flow.condition = text;
      }
      result_.model.sequence_flows.push_back(std::move(flow));
    }
    for (const xml::Element* m : pending_messages_) {
      auto source = resolve(m->attribute("sourceRef"));
      auto target = resolve(m->attribute("targetRef"));
      if (!source || !target) {
        note(*m, "message flow endpoint is not a modeled node");
        continue;
      }
      MessageFlow flow;
      flow.id = take_id(*m);
      flow.source = *source;
      flow.target = *target;
      flow.label = label_of(*m);
      result_.model.message_flows.push_back(std::move(flow));
    }
  }

  void read_message_flow(const xml::Element& m) { pending_messages_.push_back(&m); }

  ReadResult result_;
  IdAllocator ids_;
  std::unordered_map<std::string, std::string> renamed_;
  std::set<std::string> node_ids_;
  std::vector<const xml::Element*> pending_flows_;
  std::vector<const xml::Element*> pending_messages_;
};

}  // namespace

ReadResult parse_bpmn(std::string_view xml_text) {
  xml::Element root = xml::parse(xml_text);
  return Reader().run(root);
}

ReadResult parse_bpmn(const BpmnDocument& doc) { return parse_bpmn(doc.xml_text); }

// ---------------------------------------------------------------------------
// Layout

namespace {

constexpr double kColumnWidth = 160;
constexpr double kRowHeight = 110;
constexpr double kPoolHeader = 30;
constexpr double kMargin = 40;

Box node_size(const Node& n) {
  switch (n.kind) {
    case NodeKind::task: return {0, 0, 100, 80};
    case NodeKind::event: return {0, 0, 36, 36};
    case NodeKind::gateway: return {0, 0, 50, 50};
  }
  return {};
}

}  // namespace

LayoutPlan layout(const ProcessModel& model) {
  LayoutPlan plan;
  const std::size_t n = model.nodes.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(model.nodes[i].id, i);

  std::vector<std::vector<std::size_t>> succ(n), pred(n);
  for (const SequenceFlow& f : model.sequence_flows) {
    std::size_t s = index.at(f.source), t = index.at(f.target);
    succ[s].push_back(t);
  }

  // Depth-first search from sources marks back edges; the rest form a DAG.
  std::vector<int> state(n, 0);
  std::set<std::pair<std::size_t, std::size_t>> back;
  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    state[u] = 1;
    for (std::size_t v : succ[u]) {
      if (state[v] == 1)
        back.insert({u, v});
      else if (state[v] == 0)
        dfs(v);
    }
    state[u] = 2;
  };
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v : succ[u]) ++indegree[v];
  for (std::size_t u = 0; u < n; ++u)
    if (model.nodes[u].is_event(EventPosition::start) && state[u] == 0) dfs(u);
  for (std::size_t u = 0; u < n; ++u)
    if (indegree[u] == 0 && state[u] == 0) dfs(u);
  for (std::size_t u = 0; u < n; ++u)
    if (state[u] == 0) dfs(u);

  std::vector<std::size_t> dag_in(n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v : succ[u])
      if (!back.count({u, v})) {
        pred[v].push_back(u);
        ++dag_in[v];
      }
  std::vector<int> rank(n, 0);
  std::vector<std::size_t> queue;
  for (std::size_t u = 0; u < n; ++u)
    if (dag_in[u] == 0) queue.push_back(u);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t u = queue[head];
    for (std::size_t v : succ[u]) {
      if (back.count({u, v})) continue;
      rank[v] = std::max(rank[v], rank[u] + 1);
      if (--dag_in[v] == 0) queue.push_back(v);
    }
  }
  int max_rank = 0;
  for (std::size_t u = 0; u < n; ++u) max_rank = std::max(max_rank, rank[u]);

  // Bands: unpooled nodes first, then each pool's lanes (or the pool body when it has no lanes).
  struct Band {
    std::optional<std::size_t> pool;
    std::optional<std::size_t> lane;
    std::vector<std::size_t> members;
    double top = 0, height = 0;
  };
  auto where = placements(model);
  std::vector<Band> bands;
  std::map<std::pair<long, long>, std::size_t> band_of_key;
  auto band_key = [](std::optional<std::size_t> p, std::optional<std::size_t> l) {
    return std::pair<long, long>{p ? static_cast<long>(*p) : -1, l ? static_cast<long>(*l) : -1};
  };
  auto add_band = [&](std::optional<std::size_t> p, std::optional<std::size_t> l) {
    band_of_key[band_key(p, l)] = bands.size();
    bands.push_back({p, l, {}, 0, 0});
  };
  bool any_unpooled = false;
  for (const Node& node : model.nodes) any_unpooled |= !where.count(node.id);
  if (any_unpooled || model.pools.empty()) add_band(std::nullopt, std::nullopt);
  for (std::size_t p = 0; p < model.pools.size(); ++p) {
    const Pool& pool = model.pools[p];
    for (std::size_t l = 0; l < pool.lanes.size(); ++l) add_band(p, l);
    if (pool.lanes.empty() || !pool.members.empty()) add_band(p, std::nullopt);
  }
  for (std::size_t u = 0; u < n; ++u) {
    auto it = where.find(model.nodes[u].id);
    auto key = it == where.end() ? band_key(std::nullopt, std::nullopt) : band_key(it->second.pool, it->second.lane);
    bands[band_of_key.at(key)].members.push_back(u);
  }

  // Slot of each node inside its (band, rank) cell column, refined by barycenter sweeps.
  std::vector<double> slot(n, 0);
  std::map<std::pair<std::size_t, int>, std::vector<std::size_t>> cells;
  for (std::size_t b = 0; b < bands.size(); ++b)
    for (std::size_t u : bands[b].members) cells[{b, rank[u]}].push_back(u);
  auto assign_slots = [&] {
    for (auto& [key, members] : cells)
      for (std::size_t i = 0; i < members.size(); ++i) slot[members[i]] = static_cast<double>(i);
  };
  assign_slots();
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int r = 1; r <= max_rank; ++r) {
      for (auto& [key, members] : cells) {
        if (key.second != r) continue;
        std::vector<std::pair<double, std::size_t>> keyed;
        for (std::size_t i = 0; i < members.size(); ++i) {
          std::size_t u = members[i];
          double bary = static_cast<double>(i);
          if (!pred[u].empty()) {
            double sum = 0;
            for (std::size_t p : pred[u]) sum += slot[p];
            bary = sum / static_cast<double>(pred[u].size());
          }
          keyed.emplace_back(bary, i);
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::size_t> reordered;
        for (const auto& [bary, i] : keyed) reordered.push_back(members[i]);
        members = std::move(reordered);
        for (std::size_t i = 0; i < members.size(); ++i) slot[members[i]] = static_cast<double>(i);
      }
    }
  }

  double y = kMargin;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    std::size_t rows = 1;
    for (const auto& [key, members] : cells)
      if (key.first == b) rows = std::max(rows, members.size());
    bands[b].top = y;
    bands[b].height = static_cast<double>(rows) * kRowHeight;
    y += bands[b].height;
  }

  const double content_left = kMargin + (model.pools.empty() ? 0 : kPoolHeader);
  const double content_width = static_cast<double>(max_rank + 1) * kColumnWidth;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t u : bands[b].members) {
      Box box = node_size(model.nodes[u]);
      box.x = content_left + rank[u] * kColumnWidth + (kColumnWidth - box.width) / 2;
      box.y = bands[b].top + slot[u] * kRowHeight + (kRowHeight - box.height) / 2;
      plan.nodes[model.nodes[u].id] = box;
      plan.ranks[model.nodes[u].id] = rank[u];
    }
  }

  for (std::size_t p = 0; p < model.pools.size(); ++p) {
    double top = 0, bottom = 0;
    bool first = true;
    for (const Band& band : bands) {
      if (band.pool != p) continue;
      top = first ? band.top : std::min(top, band.top);
      bottom = first ? band.top + band.height : std::max(bottom, band.top + band.height);
      first = false;
      if (band.lane)
        plan.lanes[model.pools[p].lanes[*band.lane].id] = {content_left, band.top, content_width, band.height};
    }
    plan.pools[model.pools[p].id] = {kMargin, top, kPoolHeader + content_width, bottom - top};
  }

  for (const SequenceFlow& f : model.sequence_flows) {
    const Box& s = plan.nodes.at(f.source);
    const Box& t = plan.nodes.at(f.target);
    Point a{s.x + s.width, s.y + s.height / 2};
    Point b{t.x, t.y + t.height / 2};
    if (std::abs(a.y - b.y) < 1e-9) {
      plan.edges[f.id] = {a, b};
    } else {
      double mid = (a.x + b.x) / 2;
      plan.edges[f.id] = {a, {mid, a.y}, {mid, b.y}, b};
    }
  }
  for (const MessageFlow& f : model.message_flows) {
    const Box& s = plan.nodes.at(f.source);
    const Box& t = plan.nodes.at(f.target);
    bool down = s.y < t.y;
    Point a{s.x + s.width / 2, down ? s.y + s.height : s.y};
    Point b{t.x + t.width / 2, down ? t.y : t.y + t.height};
    plan.edges[f.id] = {a, {a.x, (a.y + b.y) / 2}, {b.x, (a.y + b.y) / 2}, b};
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Writing

namespace {

std::string number(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

using Attrs = std::vector<std::pair<std::string, std::string>>;

std::string_view element_name(const Node& n) {
  switch (n.kind) {
    case NodeKind::task: return "bpmn:task";
    case NodeKind::event:
      switch (n.position) {
        case EventPosition::start: return "bpmn:startEvent";
        case EventPosition::intermediate: return "bpmn:intermediateThrowEvent";
        case EventPosition::end: return "bpmn:endEvent";
      }
      break;
    case NodeKind::gateway:
      return n.gateway_type == GatewayType::exclusive ? "bpmn:exclusiveGateway" : "bpmn:parallelGateway";
  }
  return "bpmn:task";
}

}  // namespace

BpmnDocument serialize_bpmn(const ProcessModel& model, const WriteOptions& options) {
  IdAllocator ids;
  for (const Node& n : model.nodes) ids.reserve(n.id);
  for (const SequenceFlow& f : model.sequence_flows) ids.reserve(f.id);
  for (const Pool& p : model.pools) {
    ids.reserve(p.id);
    for (const Lane& l : p.lanes) ids.reserve(l.id);
  }
  for (const MessageFlow& f : model.message_flows) ids.reserve(f.id);

  auto where = placements(model);
  const bool collaboration = !model.pools.empty() || !model.message_flows.empty();

  // One process per pool, plus one for nodes outside every pool.
  struct ProcessPlan {
    std::string id;
    std::optional<std::size_t> pool;
    std::vector<const Node*> nodes;
    std::vector<const SequenceFlow*> flows;
  };
  std::vector<ProcessPlan> processes;
  for (std::size_t p = 0; p < model.pools.size(); ++p)
    processes.push_back({ids.make("Process_" + model.pools[p].id), p, {}, {}});
  bool any_unpooled = model.pools.empty();
  for (const Node& node : model.nodes) any_unpooled |= !where.count(node.id);
  std::size_t free_process = processes.size();
  if (any_unpooled) {
    std::string pid = model.pools.empty() && is_valid_identifier(model.id) && !ids.contains(model.id)
                          ? model.id
                          : ids.make("Process_1");
    ids.reserve(pid);
    processes.push_back({pid, std::nullopt, {}, {}});
  }
  auto process_of = [&](const std::string& node_id) {
    auto it = where.find(node_id);
    return it == where.end() ? free_process : *it->second.pool;
  };
  for (const Node& node : model.nodes) processes[process_of(node.id)].nodes.push_back(&node);
  for (const SequenceFlow& f : model.sequence_flows) processes[process_of(f.source)].flows.push_back(&f);

  std::map<std::string, std::vector<std::string>> incoming, outgoing;
  for (const SequenceFlow& f : model.sequence_flows) {
    outgoing[f.source].push_back(f.id);
    incoming[f.target].push_back(f.id);
  }

  xml::Writer w;
  w.open("bpmn:definitions", {{"xmlns:bpmn", std::string(kModelNamespace)},
                              {"xmlns:bpmndi", std::string(kDiNamespace)},
                              {"xmlns:dc", "http://www.omg.org/spec/DD/20100524/DC"},
                              {"xmlns:di", "http://www.omg.org/spec/DD/20100524/DI"},
                              {"xmlns:xsi", "http://www.w3.org/2001/XMLSchema-instance"},
                              {"id", ids.make("Definitions_1")},
                              {"targetNamespace", "http://bpmn.io/schema/bpmn"}});

  std::string collaboration_id;
  if (collaboration) {
    collaboration_id = ids.make("Collaboration_1");
    w.open("bpmn:collaboration", {{"id", collaboration_id}});
    for (const ProcessPlan& pp : processes) {
      if (!pp.pool) continue;
      const Pool& pool = model.pools[*pp.pool];
      Attrs attrs{{"id", pool.id}};
      if (!pool.name.empty()) attrs.emplace_back("name", pool.name);
      attrs.emplace_back("processRef", pp.id);
      w.leaf("bpmn:participant", attrs);
    }
    for (const MessageFlow& f : model.message_flows) {
      Attrs attrs{{"id", f.id}};
      if (auto label = clean_label(f.label)) attrs.emplace_back("name", *f.label);
      attrs.emplace_back("sourceRef", f.source);
      attrs.emplace_back("targetRef", f.target);
      w.leaf("bpmn:messageFlow", attrs);
    }
    w.close();
  }

  for (const ProcessPlan& pp : processes) {
    Attrs attrs{{"id", pp.id}};
    if (!pp.pool && model.name) attrs.emplace_back("name", *model.name);
    attrs.emplace_back("isExecutable", "false");
    w.open("bpmn:process", attrs);
    if (pp.pool && !model.pools[*pp.pool].lanes.empty()) {
      w.open("bpmn:laneSet", {{"id", ids.make("LaneSet_" + model.pools[*pp.pool].id)}});
      for (const Lane& lane : model.pools[*pp.pool].lanes) {
        Attrs lane_attrs{{"id", lane.id}};
        if (!lane.name.empty()) lane_attrs.emplace_back("name", lane.name);
        if (lane.members.empty()) {
          w.leaf("bpmn:lane", lane_attrs);
          continue;
        }
        w.open("bpmn:lane", lane_attrs);
        for (const std::string& m : lane.members) w.text_element("bpmn:flowNodeRef", m);
        w.close();
      }
      w.close();
    }
    for (const Node* node : pp.nodes) {
      Attrs node_attrs{{"id", node->id}};
      if (clean_label(node->label)) node_attrs.emplace_back("name", *node->label);
      const auto& in = incoming[node->id];
      const auto& out = outgoing[node->id];
      if (in.empty() && out.empty()) {
        w.leaf(element_name(*node), node_attrs);
        continue;
      }
      w.open(element_name(*node), node_attrs);
      for (const std::string& f : in) w.text_element("bpmn:incoming", f);
      for (const std::string& f : out) w.text_element("bpmn:outgoing", f);
      w.close();
    }
    for (const SequenceFlow* f : pp.flows) {
      Attrs flow_attrs{{"id", f->id}};
      auto condition = clean_label(f->condition);
      if (condition) flow_attrs.emplace_back("name", *f->condition);
      flow_attrs.emplace_back("sourceRef", f->source);
      flow_attrs.emplace_back("targetRef", f->target);
      if (!condition) {
        w.leaf("bpmn:sequenceFlow", flow_attrs);
        continue;
      }
      w.open("bpmn:sequenceFlow", flow_attrs);
      w.text_element("bpmn:conditionExpression", *condition, {{"xsi:type", "bpmn:tFormalExpression"}});
      w.close();
    }
    if (options.preserve_unknown && options.preserved) {
      for (const PreservedElement& pe : *options.preserved) {
        bool here = pe.pool_id ? (pp.pool && model.pools[*pp.pool].id == *pe.pool_id) : !pp.pool;
        if (here) w.raw(pe.element);
      }
    }
    w.close();
  }

  if (options.include_diagram) {
    LayoutPlan plan = layout(model);
    w.open("bpmndi:BPMNDiagram", {{"id", ids.make("BPMNDiagram_1")}});
    w.open("bpmndi:BPMNPlane", {{"id", ids.make("BPMNPlane_1")},
                                {"bpmnElement", collaboration ? collaboration_id : processes.front().id}});
    auto shape = [&](const std::string& element, const Box& box, bool horizontal) {
      Attrs attrs{{"id", ids.make(element + "_di")}, {"bpmnElement", element}};
      if (horizontal) attrs.emplace_back("isHorizontal", "true");
      w.open("bpmndi:BPMNShape", attrs);
      w.leaf("dc:Bounds",
             {{"x", number(box.x)}, {"y", number(box.y)}, {"width", number(box.width)}, {"height", number(box.height)}});
      w.close();
    };
    for (const Pool& pool : model.pools) {
      shape(pool.id, plan.pools.at(pool.id), true);
      for (const Lane& lane : pool.lanes) shape(lane.id, plan.lanes.at(lane.id), true);
    }
    for (const Node& node : model.nodes) shape(node.id, plan.nodes.at(node.id), false);
    auto edge = [&](const std::string& element) {
      w.open("bpmndi:BPMNEdge", {{"id", ids.make(element + "_di")}, {"bpmnElement", element}});
      for (const Point& p : plan.edges.at(element)) w.leaf("di:waypoint", {{"x", number(p.x)}, {"y", number(p.y)}});
      w.close();
    };
    for (const SequenceFlow& f : model.sequence_flows) edge(f.id);
    for (const MessageFlow& f : model.message_flows) edge(f.id);
    w.close();
    w.close();
  }
  w.close();
  return make_document(w.str());
}

}  // namespace pmrkit::bpmn
