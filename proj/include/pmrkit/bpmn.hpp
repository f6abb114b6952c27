#pragma once

// BPMN 2.0 XML reading and writing, including a generated diagram-interchange section.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmrkit/model.hpp"
#include "pmrkit/xml.hpp"

namespace pmrkit::bpmn {

inline constexpr std::string_view kModelNamespace = "http://www.omg.org/spec/BPMN/20100524/MODEL";
inline constexpr std::string_view kDiNamespace = "http://www.omg.org/spec/BPMN/20100524/DI";

struct BpmnDocument {
  std::string xml_text;
  bool has_diagram_section = false;
  std::optional<std::string> source_path;
};

/// Wraps raw XML text, detecting whether a BPMNDiagram element is present.
BpmnDocument make_document(std::string xml_text, std::optional<std::string> source_path = std::nullopt);

/// Something in the source document that the canonical model does not carry.
struct Skipped {
  std::string element_id;
  std::string element_name;
  std::string reason;
};

/// Unknown content kept verbatim so it can be written back in preserving mode.
struct PreservedElement {
  std::optional<std::string> pool_id;
  xml::Element element;
};

struct ReadResult {
  ProcessModel model;
  std::vector<Skipped> skipped;
  std::vector<PreservedElement> preserved;
};

/// Throws ParseError on malformed XML and UnsupportedElementError for unsupported gateway kinds.
ReadResult parse_bpmn(const BpmnDocument& doc);
ReadResult parse_bpmn(std::string_view xml_text);

struct Box {
  double x = 0, y = 0, width = 0, height = 0;
  bool overlaps(const Box& o) const {
    return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
  }
};

struct Point {
  double x = 0, y = 0;
};

struct LayoutPlan {
  std::map<std::string, Box> nodes;
  /// Sequence flows and message flows.
  std::map<std::string, std::vector<Point>> edges;
  std::map<std::string, Box> pools;
  std::map<std::string, Box> lanes;
  /// Layer index of each node (the x-rank).
  std::map<std::string, int> ranks;
};

/// Layered left-to-right placement: longest-path ranks from the sources, barycenter ordering
/// inside each layer, one horizontal band per lane. Deterministic.
LayoutPlan layout(const ProcessModel& model);

struct WriteOptions {
  bool include_diagram = true;
  /// Re-emit preserved unknown elements.
  bool preserve_unknown = false;
  const std::vector<PreservedElement>* preserved = nullptr;
};

BpmnDocument serialize_bpmn(const ProcessModel& model, const WriteOptions& options);
inline BpmnDocument serialize_bpmn(const ProcessModel& model, bool include_diagram) {
  return serialize_bpmn(model, WriteOptions{include_diagram});
}

}  // namespace pmrkit::bpmn
