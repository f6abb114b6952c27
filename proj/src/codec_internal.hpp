#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmrkit/codecs.hpp"

namespace pmrkit::detail {

std::string encode_graphviz(const ProcessModel& model, std::map<std::string, std::string>* renamed);
DecodeResult decode_graphviz(std::string_view text, const DecodeOptions& options);

std::string encode_mermaid(const ProcessModel& model, std::map<std::string, std::string>* renamed);
DecodeResult decode_mermaid(std::string_view text, const DecodeOptions& options);

std::string encode_simplified_xml(const ProcessModel& model);
ProcessModel decode_simplified_xml(std::string_view text);

std::string encode_bpmn_text(const BranchTree& tree);
BranchTree decode_bpmn_text(std::string_view text);

std::string encode_json_branches(const BranchTree& tree);
BranchTree decode_json_branches(std::string_view text);

std::string encode_powl(const BranchTree& tree);
BranchTree decode_powl(std::string_view text);

/// Node shapes a lenient graph notation can declare.
enum class Shape { task, event, start_event, intermediate_event, end_event, exclusive, parallel };

/// Collects nodes and edges from a graph notation and turns them into a well-formed model.
/// Keys are notation identifiers; they are mapped into the canonical id alphabet on finish.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string notation) : notation_(std::move(notation)) {}

  /// A node statement with an explicit shape. Later declarations replace earlier ones.
  void declare(const std::string& key, Shape shape, std::optional<std::string> label);
  void edge(const std::string& source, const std::string& target, std::optional<std::string> condition);
  bool declared(const std::string& key) const;

  /// Undeclared endpoints become unlabeled tasks with a warning, or a ParseError when `strict`.
  /// Plain `event` shapes take their position from their degree.
  DecodeResult finish(bool strict) const;

 private:
  struct RawNode {
    std::string key;
    Shape shape = Shape::task;
    std::optional<std::string> label;
    bool declared = false;
  };
  struct RawEdge {
    std::string source, target;
    std::optional<std::string> condition;
  };
  RawNode& touch(const std::string& key);

  std::string notation_;
  std::vector<RawNode> nodes_;
  std::map<std::string, std::size_t> index_;
  std::vector<RawEdge> edges_;
};

}  // namespace pmrkit::detail
