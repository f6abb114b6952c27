#include "pmrkit/codecs.hpp"

#include <set>

#include <json.hpp>

#include "codec_internal.hpp"
#include "json_schema.hpp"
#include "pmrkit/bpmn.hpp"
#include "pmrkit/errors.hpp"
#include "pmrkit_schemas.hpp"

namespace pmrkit {

namespace {

struct PmrName {
  PmrId pmr;
  std::string_view name;
  std::string_view extension;
};

constexpr PmrName kNames[] = {
    {PmrId::bpmn, "bpmn", ".bpmn"},
    {PmrId::bpmn_process, "bpmn_process", ".process.bpmn"},
    {PmrId::graphviz, "graphviz", ".dot"},
    {PmrId::mermaid, "mermaid", ".mmd"},
    {PmrId::pme, "pme", ".pme.json"},
    {PmrId::simplified_xml, "simplified_xml", ".sxml"},
    {PmrId::powl_code, "powl_code", ".powl.py"},
    {PmrId::bpmn_text, "bpmn_text", ".bpmntext.xml"},
    {PmrId::json_branches, "json_branches", ".branches.json"},
};

std::vector<PmrCapabilities> build_capabilities() {
  using E = ElementType;
  const ElementTypeSet graph = {E::task,          E::start_event,      E::intermediate_event, E::end_event,
                                E::exclusive_gateway, E::parallel_gateway, E::sequence_flow,    E::condition,
                                E::decision};
  const ElementTypeSet powl = {E::task,          E::start_event,      E::end_event,
                               E::exclusive_gateway, E::parallel_gateway, E::sequence_flow};
  ElementTypeSet branches = powl;
  branches.insert(E::condition);
  branches.insert(E::decision);

  std::vector<PmrCapabilities> caps;
  //        pmr                    supported              graph  branch schema block  exec   visual
  caps.push_back({PmrId::bpmn, ElementTypeSet::all(), true, false, false, false, true, true});
  caps.push_back({PmrId::bpmn_process, ElementTypeSet::all(), true, false, false, false, true, false});
  caps.push_back({PmrId::graphviz, graph, true, false, false, false, false, true});
  caps.push_back({PmrId::mermaid, graph, true, false, false, false, false, true});
  caps.push_back({PmrId::pme, ElementTypeSet::all(), true, false, true, false, false, false});
  caps.push_back({PmrId::simplified_xml, ElementTypeSet::all(), true, false, false, false, false, false});
  caps.push_back({PmrId::powl_code, powl, false, false, false, true, true, false});
  caps.push_back({PmrId::bpmn_text, branches, false, true, false, true, false, false});
  caps.push_back({PmrId::json_branches, branches, false, true, true, true, false, false});
  return caps;
}

}  // namespace

std::string_view to_string(PmrId pmr) { return kNames[static_cast<std::size_t>(pmr)].name; }

std::optional<PmrId> pmr_from_string(std::string_view text) {
  for (const PmrName& n : kNames)
    if (n.name == text) return n.pmr;
  return std::nullopt;
}

std::string_view file_extension(PmrId pmr) { return kNames[static_cast<std::size_t>(pmr)].extension; }

std::optional<PmrId> pmr_from_path(std::string_view path) {
  std::optional<PmrId> best;
  std::size_t best_len = 0;
  for (const PmrName& n : kNames) {
    if (path.size() >= n.extension.size() && path.substr(path.size() - n.extension.size()) == n.extension &&
        n.extension.size() > best_len) {
      best = n.pmr;
      best_len = n.extension.size();
    }
  }
  return best;
}

const PmrCapabilities& capabilities(PmrId pmr) {
  static const std::vector<PmrCapabilities> caps = build_capabilities();
  return caps[static_cast<std::size_t>(pmr)];
}

std::string_view shipped_schema(PmrId pmr) {
  if (pmr == PmrId::pme) return detail::kPmeSchema;
  if (pmr == PmrId::json_branches) return detail::kBranchesSchema;
  throw ConfigError("no schema ships for " + std::string(to_string(pmr)));
}

// ---------------------------------------------------------------------------
// Dispatch

namespace {

std::string encode_branch(const ProcessModel& model, PmrId pmr, std::vector<Loss>& losses) {
  using Reason = ConvertibilityVerdict::Reason;
  if (!model.pools.empty()) throw NotConvertibleError(std::string(to_string(Reason::has_pools)));
  if (!model.message_flows.empty()) throw NotConvertibleError(std::string(to_string(Reason::has_message_flows)));

  ProcessModel restricted = restrict_to(model, capabilities(pmr).supported, &losses);
  for (Node& n : restricted.nodes) {
    if (n.kind == NodeKind::event && clean_label(n.label)) {
      losses.push_back({element_type(n), n.id, "event labels are not representable"});
      n.label.reset();
    }
  }
  StructureResult result = to_branch_tree(restricted);
  if (!result.verdict.convertible) throw NotConvertibleError(std::string(to_string(*result.verdict.reason)));
  losses.insert(losses.end(), result.losses.begin(), result.losses.end());
  BranchTree tree = restrict_tree(*result.tree, pmr, &losses);
  return encode_tree(tree, pmr);
}

void require_well_formed(const ProcessModel& model, PmrId pmr) {
  for (const Violation& v : validate(model)) {
    std::string where = std::string(to_string(pmr)) + ": " + v.message;
    if (v.kind == Violation::Kind::dangling_reference) throw ResolutionError(where);
    throw SchemaViolation(v.element_id, where);
  }
}

}  // namespace

std::string encode_tree(const BranchTree& tree, PmrId pmr) {
  switch (pmr) {
    case PmrId::powl_code: return detail::encode_powl(tree);
    case PmrId::bpmn_text: return detail::encode_bpmn_text(tree);
    case PmrId::json_branches: return detail::encode_json_branches(tree);
    default: throw Error(std::string(to_string(pmr)) + " is not a block-structured representation");
  }
}

BranchTree decode_tree(std::string_view text, PmrId pmr) {
  switch (pmr) {
    case PmrId::powl_code: return detail::decode_powl(text);
    case PmrId::bpmn_text: return detail::decode_bpmn_text(text);
    case PmrId::json_branches: return detail::decode_json_branches(text);
    default: throw Error(std::string(to_string(pmr)) + " is not a block-structured representation");
  }
}

PmrDocument encode(const ProcessModel& model, PmrId pmr) {
  PmrDocument doc;
  doc.pmr = pmr;
  switch (pmr) {
    case PmrId::bpmn: doc.text = bpmn::serialize_bpmn(model, true).xml_text; break;
    case PmrId::bpmn_process: doc.text = bpmn::serialize_bpmn(model, false).xml_text; break;
    case PmrId::pme: doc.text = pme_to_json(to_pme(model)); break;
    case PmrId::simplified_xml: doc.text = detail::encode_simplified_xml(model); break;
    case PmrId::graphviz:
    case PmrId::mermaid: {
      ProcessModel restricted = restrict_to(model, capabilities(pmr).supported, &doc.loss_report);
      doc.text = pmr == PmrId::graphviz ? detail::encode_graphviz(restricted, &doc.renamed_ids)
                                        : detail::encode_mermaid(restricted, &doc.renamed_ids);
      break;
    }
    case PmrId::powl_code:
    case PmrId::bpmn_text:
    case PmrId::json_branches: doc.text = encode_branch(model, pmr, doc.loss_report); break;
  }
  return doc;
}

DecodeResult decode(std::string_view text, PmrId pmr, const DecodeOptions& options) {
  DecodeResult result;
  switch (pmr) {
    case PmrId::bpmn:
    case PmrId::bpmn_process: {
      bpmn::ReadResult read = bpmn::parse_bpmn(text);
      result.model = std::move(read.model);
      for (const bpmn::Skipped& s : read.skipped)
        result.warnings.push_back(s.element_name + " '" + s.element_id + "': " + s.reason);
      break;
    }
    case PmrId::pme: result.model = from_pme(pme_from_json(text)); break;
    case PmrId::simplified_xml: result.model = detail::decode_simplified_xml(text); break;
    case PmrId::graphviz: result = detail::decode_graphviz(text, options); break;
    case PmrId::mermaid: result = detail::decode_mermaid(text, options); break;
    case PmrId::powl_code:
    case PmrId::bpmn_text:
    case PmrId::json_branches: result.model = expand(decode_tree(text, pmr)); break;
  }
  require_well_formed(result.model, pmr);
  return result;
}

// ---------------------------------------------------------------------------
// PME

PmeBundle to_pme(const ProcessModel& model) {
  PmeBundle b;
  auto where = placements(model);
  auto place = [&](const std::string& id, std::optional<std::string>& lane, std::optional<std::string>& pool) {
    auto it = where.find(id);
    if (it == where.end() || !it->second.pool) return;
    const Pool& p = model.pools[*it->second.pool];
    if (it->second.lane)
      lane = p.lanes[*it->second.lane].id;
    else
      pool = p.id;
  };
  for (const Node& n : model.nodes) {
    switch (n.kind) {
      case NodeKind::task: {
        PmeTask t{n.id, clean_label(n.label)};
        place(n.id, t.lane, t.pool);
        b.tasks.push_back(std::move(t));
        break;
      }
      case NodeKind::event: {
        PmeEvent e{n.id, n.position, clean_label(n.label)};
        place(n.id, e.lane, e.pool);
        b.events.push_back(std::move(e));
        break;
      }
      case NodeKind::gateway: {
        PmeGateway g{n.id, n.gateway_type, clean_label(n.label)};
        place(n.id, g.lane, g.pool);
        b.gateways.push_back(std::move(g));
        break;
      }
    }
  }
  for (const Pool& p : model.pools) {
    PmeSwimlane s{p.id, p.name, {}};
    for (const Lane& l : p.lanes) s.lanes.push_back({l.id, l.name});
    b.swimlanes.push_back(std::move(s));
  }
  for (const SequenceFlow& f : model.sequence_flows)
    b.sequence_flows.push_back({f.source, f.target, clean_label(f.condition)});
  for (const MessageFlow& m : model.message_flows) b.message_flows.push_back({m.source, m.target, clean_label(m.label)});
  return b;
}

ProcessModel from_pme(const PmeBundle& bundle) {
  ProcessModel model;
  IdAllocator ids;
  std::map<std::string, std::pair<std::size_t, std::optional<std::size_t>>> containers;
  for (const PmeSwimlane& s : bundle.swimlanes) {
    Pool p{s.id, s.name, {}, {}};
    containers[s.id] = {model.pools.size(), std::nullopt};
    ids.reserve(s.id);
    for (const PmeLane& l : s.lanes) {
      containers[l.id] = {model.pools.size(), p.lanes.size()};
      ids.reserve(l.id);
      p.lanes.push_back({l.id, l.name, {}});
    }
    model.pools.push_back(std::move(p));
  }
  auto assign = [&](const std::string& node, const std::optional<std::string>& lane,
                    const std::optional<std::string>& pool) {
    const std::optional<std::string>& ref = lane ? lane : pool;
    if (!ref) return;
    auto it = containers.find(*ref);
    if (it == containers.end() || (lane && !it->second.second) || (!lane && it->second.second))
      throw ResolutionError("PME: node '" + node + "' references unknown " + (lane ? "lane" : "pool") + " '" +
                            *ref + "'");
    Pool& p = model.pools[it->second.first];
    if (it->second.second)
      p.lanes[*it->second.second].members.push_back(node);
    else
      p.members.push_back(node);
  };
  for (const PmeTask& t : bundle.tasks) {
    model.nodes.push_back(Node::task(t.id, t.label));
    assign(t.id, t.lane, t.pool);
  }
  for (const PmeEvent& e : bundle.events) {
    model.nodes.push_back(Node::event(e.id, e.position, e.label));
    assign(e.id, e.lane, e.pool);
  }
  for (const PmeGateway& g : bundle.gateways) {
    model.nodes.push_back(Node::gateway(g.id, g.type, g.decision));
    assign(g.id, g.lane, g.pool);
  }
  std::set<std::string> node_ids;
  for (const Node& n : model.nodes) {
    ids.reserve(n.id);
    node_ids.insert(n.id);
  }
  auto resolve = [&](const std::string& id, const char* what) {
    if (!node_ids.count(id)) throw ResolutionError(std::string("PME: ") + what + " references unknown node '" + id + "'");
  };
  for (const PmeSequenceFlow& f : bundle.sequence_flows) {
    resolve(f.source, "sequence flow");
    resolve(f.target, "sequence flow");
    model.sequence_flows.push_back({ids.next("flow"), f.source, f.target, f.condition});
  }
  for (const PmeMessageFlow& m : bundle.message_flows) {
    resolve(m.source, "message flow");
    resolve(m.target, "message flow");
    model.message_flows.push_back({ids.next("message"), m.source, m.target, m.label});
  }
  return model;
}

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void put(ordered_json& j, const char* key, const std::optional<std::string>& value) {
  if (value) j[key] = *value;
}

std::optional<std::string> get(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end()) return clean_label(it->get<std::string>());
  return std::nullopt;
}

std::optional<std::string> get_id(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end()) return it->get<std::string>();
  return std::nullopt;
}

}  // namespace

std::string pme_to_json(const PmeBundle& b) {
  ordered_json root;
  root["tasks"] = ordered_json::array();
  for (const PmeTask& t : b.tasks) {
    ordered_json j;
    j["id"] = t.id;
    put(j, "label", t.label);
    put(j, "lane", t.lane);
    put(j, "pool", t.pool);
    root["tasks"].push_back(std::move(j));
  }
  root["events"] = ordered_json::array();
  for (const PmeEvent& e : b.events) {
    ordered_json j;
    j["id"] = e.id;
    j["position"] = std::string(to_string(e.position));
    put(j, "label", e.label);
    put(j, "lane", e.lane);
    put(j, "pool", e.pool);
    root["events"].push_back(std::move(j));
  }
  root["gateways"] = ordered_json::array();
  for (const PmeGateway& g : b.gateways) {
    ordered_json j;
    j["id"] = g.id;
    j["type"] = std::string(to_string(g.type));
    put(j, "decision", g.decision);
    put(j, "lane", g.lane);
    put(j, "pool", g.pool);
    root["gateways"].push_back(std::move(j));
  }
  root["swimlanes"] = ordered_json::array();
  for (const PmeSwimlane& s : b.swimlanes) {
    ordered_json j;
    j["id"] = s.id;
    j["name"] = s.name;
    j["lanes"] = ordered_json::array();
    for (const PmeLane& l : s.lanes) j["lanes"].push_back({{"id", l.id}, {"name", l.name}});
    root["swimlanes"].push_back(std::move(j));
  }
  root["sequence_flows"] = ordered_json::array();
  for (const PmeSequenceFlow& f : b.sequence_flows) {
    ordered_json j;
    j["source"] = f.source;
    j["target"] = f.target;
    put(j, "condition", f.condition);
    root["sequence_flows"].push_back(std::move(j));
  }
  root["message_flows"] = ordered_json::array();
  for (const PmeMessageFlow& m : b.message_flows) {
    ordered_json j;
    j["source"] = m.source;
    j["target"] = m.target;
    put(j, "label", m.label);
    root["message_flows"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

PmeBundle pme_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("PME: ") + e.what(), 0, 0, "a JSON object with six element lists");
  }
  static const json schema = json::parse(shipped_schema(PmrId::pme));
  detail::validate_schema(doc, schema);

  PmeBundle b;
  for (const json& j : doc["tasks"]) b.tasks.push_back({j["id"], get(j, "label"), get_id(j, "lane"), get_id(j, "pool")});
  for (const json& j : doc["events"])
    b.events.push_back({j["id"], *event_position_from_string(j["position"].get<std::string>()), get(j, "label"),
                        get_id(j, "lane"), get_id(j, "pool")});
  for (const json& j : doc["gateways"])
    b.gateways.push_back({j["id"], *gateway_type_from_string(j["type"].get<std::string>()), get(j, "decision"),
                          get_id(j, "lane"), get_id(j, "pool")});
  for (const json& j : doc["swimlanes"]) {
    PmeSwimlane s{j["id"], j["name"], {}};
    for (const json& l : j["lanes"]) s.lanes.push_back({l["id"], l["name"]});
    b.swimlanes.push_back(std::move(s));
  }
  for (const json& j : doc["sequence_flows"]) b.sequence_flows.push_back({j["source"], j["target"], get(j, "condition")});
  for (const json& j : doc["message_flows"]) b.message_flows.push_back({j["source"], j["target"], get(j, "label")});
  return b;
}

}  // namespace pmrkit
