#include <sstream>

#include "codec_internal.hpp"
#include "pmrkit/errors.hpp"
#include "pmrkit/xml.hpp"

namespace pmrkit::detail {

namespace {

using Attrs = std::vector<std::pair<std::string, std::string>>;

void add_optional(Attrs& attrs, const char* key, const std::optional<std::string>& value) {
  if (auto v = clean_label(value)) attrs.emplace_back(key, *v);
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    if (!out.empty()) out += ' ';
    out += id;
  }
  return out;
}

std::string_view element_name(const Node& n) {
  switch (n.kind) {
    case NodeKind::task: return "task";
    case NodeKind::gateway: return n.gateway_type == GatewayType::parallel ? "parallelGateway" : "exclusiveGateway";
    case NodeKind::event:
      return n.position == EventPosition::start ? "startEvent"
             : n.position == EventPosition::end ? "endEvent"
                                                : "intermediateEvent";
  }
  return "task";
}

}  // namespace

std::string encode_simplified_xml(const ProcessModel& model) {
  xml::Writer w(false);
  w.open("process", {{"id", model.id}});
  for (const Node& n : model.nodes) {
    Attrs attrs{{"id", n.id}};
    add_optional(attrs, "name", n.label);
    w.leaf(element_name(n), attrs);
  }
  for (const SequenceFlow& f : model.sequence_flows) {
    Attrs attrs{{"id", f.id}, {"source", f.source}, {"target", f.target}};
    add_optional(attrs, "condition", f.condition);
    w.leaf("sequenceFlow", attrs);
  }
  for (const Pool& p : model.pools) {
    Attrs attrs{{"id", p.id}, {"name", p.name}};
    if (!p.members.empty()) attrs.emplace_back("ref", join_ids(p.members));
    if (p.lanes.empty()) {
      w.leaf("pool", attrs);
      continue;
    }
    w.open("pool", attrs);
    for (const Lane& l : p.lanes) w.leaf("lane", {{"id", l.id}, {"name", l.name}, {"ref", join_ids(l.members)}});
    w.close();
  }
  for (const MessageFlow& m : model.message_flows) {
    Attrs attrs{{"id", m.id}, {"source", m.source}, {"target", m.target}};
    add_optional(attrs, "name", m.label);
    w.leaf("messageFlow", attrs);
  }
  w.close();
  return w.str();
}

namespace {

class SxmlReader {
 public:
  ProcessModel read(const xml::Element& root) {
    if (root.local_name() != "process")
      throw ParseError("simplified XML: unexpected root <" + root.name + ">", root.line, root.column, "<process>");
    if (auto id = root.optional_attribute("id"); id && is_valid_identifier(*id)) model_.id = *id;
    model_.name = clean_label(root.optional_attribute("name"));
    for (const xml::Element& e : root.children) reserve(e);
    for (const xml::Element& e : root.children) element(e);
    return std::move(model_);
  }

 private:
  void reserve(const xml::Element& e) {
    if (auto id = e.optional_attribute("id")) ids_.reserve(*id);
    for (const xml::Element& c : e.children) reserve(c);
  }

  std::string id_of(const xml::Element& e, std::string_view prefix) {
    if (auto id = e.optional_attribute("id")) return *id;
    return ids_.next(prefix);
  }

  const std::string& required(const xml::Element& e, std::string_view attr) {
    const std::string* v = e.attribute(attr);
    if (!v)
      throw ParseError("simplified XML: <" + e.name + "> lacks '" + std::string(attr) + "'", e.line, e.column,
                       "attribute '" + std::string(attr) + "'");
    return *v;
  }

  static std::vector<std::string> split_ids(const std::optional<std::string>& text) {
    std::vector<std::string> out;
    if (!text) return out;
    std::istringstream in(*text);
    std::string id;
    while (in >> id) out.push_back(id);
    return out;
  }

  void element(const xml::Element& e) {
    std::string_view name = e.local_name();
    auto label = clean_label(e.optional_attribute("name"));
    if (name == "task") {
      model_.nodes.push_back(Node::task(id_of(e, "task"), label));
    } else if (name == "startEvent") {
      model_.nodes.push_back(Node::event(id_of(e, "event"), EventPosition::start, label));
    } else if (name == "endEvent") {
      model_.nodes.push_back(Node::event(id_of(e, "event"), EventPosition::end, label));
    } else if (name == "intermediateEvent") {
      model_.nodes.push_back(Node::event(id_of(e, "event"), EventPosition::intermediate, label));
    } else if (name == "exclusiveGateway") {
      model_.nodes.push_back(Node::gateway(id_of(e, "gateway"), GatewayType::exclusive, label));
    } else if (name == "parallelGateway") {
      model_.nodes.push_back(Node::gateway(id_of(e, "gateway"), GatewayType::parallel, label));
    } else if (name == "sequenceFlow") {
      model_.sequence_flows.push_back({id_of(e, "flow"), required(e, "source"), required(e, "target"),
                                       clean_label(e.optional_attribute("condition"))});
    } else if (name == "messageFlow") {
      model_.message_flows.push_back({id_of(e, "message"), required(e, "source"), required(e, "target"), label});
    } else if (name == "pool") {
      Pool p{id_of(e, "pool"), e.optional_attribute("name").value_or(""), {}, split_ids(e.optional_attribute("ref"))};
      for (const xml::Element& c : e.children) {
        if (c.local_name() != "lane")
          throw ParseError("simplified XML: unexpected <" + c.name + "> inside <pool>", c.line, c.column, "<lane>");
        p.lanes.push_back({id_of(c, "lane"), c.optional_attribute("name").value_or(""), split_ids(c.optional_attribute("ref"))});
      }
      model_.pools.push_back(std::move(p));
    } else {
      throw ParseError("simplified XML: unknown element <" + e.name + ">", e.line, e.column,
                       "task, event, gateway, sequenceFlow, pool or messageFlow");
    }
  }

  ProcessModel model_;
  IdAllocator ids_;
};

}  // namespace

ProcessModel decode_simplified_xml(std::string_view text) {
  ProcessModel model = SxmlReader().read(xml::parse(text));
  for (const Violation& v : validate(model))
    if (v.kind == Violation::Kind::dangling_reference) throw ResolutionError("simplified XML: " + v.message);
  return model;
}

}  // namespace pmrkit::detail
