#include <set>

#include "codec_internal.hpp"
#include "pmrkit/errors.hpp"

namespace pmrkit::detail {

GraphBuilder::RawNode& GraphBuilder::touch(const std::string& key) {
  auto [it, inserted] = index_.emplace(key, nodes_.size());
  if (inserted) nodes_.push_back({key});
  return nodes_[it->second];
}

void GraphBuilder::declare(const std::string& key, Shape shape, std::optional<std::string> label) {
  RawNode& n = touch(key);
  n.shape = shape;
  n.label = clean_label(label);
  n.declared = true;
}

void GraphBuilder::edge(const std::string& source, const std::string& target, std::optional<std::string> condition) {
  touch(source);
  touch(target);
  edges_.push_back({source, target, clean_label(condition)});
}

bool GraphBuilder::declared(const std::string& key) const {
  auto it = index_.find(key);
  return it != index_.end() && nodes_[it->second].declared;
}

DecodeResult GraphBuilder::finish(bool strict) const {
  DecodeResult result;
  std::map<std::string, int> in, out;
  for (const RawEdge& e : edges_) {
    ++out[e.source];
    ++in[e.target];
  }

  IdAllocator ids;
  std::map<std::string, std::string> id_of;
  // Keys that are already canonical keep their spelling; the rest are sanitized afterwards.
  for (const RawNode& n : nodes_)
    if (is_valid_identifier(n.key) && !ids.contains(n.key)) {
      ids.reserve(n.key);
      id_of[n.key] = n.key;
    }
  for (const RawNode& n : nodes_)
    if (!id_of.count(n.key)) id_of[n.key] = ids.make(n.key);

  for (const RawNode& n : nodes_) {
    const std::string& id = id_of[n.key];
    if (!n.declared) {
      std::string message = notation_ + ": edge endpoint '" + n.key + "' is never declared";
      if (strict) throw ParseError(message, 0, 0, "a node declaration for '" + n.key + "'");
      result.warnings.push_back(message + "; recovered as an unlabeled task");
    }
    switch (n.shape) {
      case Shape::task: result.model.nodes.push_back(Node::task(id, n.label)); break;
      case Shape::event: {
        EventPosition p = in[n.key] == 0    ? EventPosition::start
                          : out[n.key] == 0 ? EventPosition::end
                                            : EventPosition::intermediate;
        result.model.nodes.push_back(Node::event(id, p, n.label));
        break;
      }
      case Shape::start_event: result.model.nodes.push_back(Node::event(id, EventPosition::start, n.label)); break;
      case Shape::intermediate_event:
        result.model.nodes.push_back(Node::event(id, EventPosition::intermediate, n.label));
        break;
      case Shape::end_event: result.model.nodes.push_back(Node::event(id, EventPosition::end, n.label)); break;
      case Shape::exclusive:
        result.model.nodes.push_back(Node::gateway(id, GatewayType::exclusive, n.label));
        break;
      case Shape::parallel: result.model.nodes.push_back(Node::gateway(id, GatewayType::parallel, n.label)); break;
    }
  }
  for (const RawEdge& e : edges_)
    result.model.sequence_flows.push_back({ids.next("flow"), id_of[e.source], id_of[e.target], e.condition});
  return result;
}

}  // namespace pmrkit::detail
