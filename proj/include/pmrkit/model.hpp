#pragma once

// Canonical process-model structures shared by every codec and metric.

#include <array>
#include <bitset>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pmrkit {

enum class NodeKind { task, event, gateway };
enum class EventPosition { start, intermediate, end };
enum class GatewayType { exclusive, parallel };

std::string_view to_string(NodeKind kind);
std::string_view to_string(EventPosition position);
std::string_view to_string(GatewayType type);
std::optional<EventPosition> event_position_from_string(std::string_view text);
std::optional<GatewayType> gateway_type_from_string(std::string_view text);

struct Node {
  std::string id;
  NodeKind kind = NodeKind::task;
  /// Task label, event label, or gateway decision.
  std::optional<std::string> label;
  /// Meaningful for events only.
  EventPosition position = EventPosition::start;
  /// Meaningful for gateways only.
  GatewayType gateway_type = GatewayType::exclusive;

  static Node task(std::string id, std::optional<std::string> label = std::nullopt);
  static Node event(std::string id, EventPosition position, std::optional<std::string> label = std::nullopt);
  static Node gateway(std::string id, GatewayType type, std::optional<std::string> decision = std::nullopt);

  bool is_event(EventPosition p) const { return kind == NodeKind::event && position == p; }
  bool is_gateway(GatewayType t) const { return kind == NodeKind::gateway && gateway_type == t; }
};

struct SequenceFlow {
  std::string id;
  std::string source;
  std::string target;
  std::optional<std::string> condition;
};

struct Lane {
  std::string id;
  std::string name;
  std::vector<std::string> members;
};

struct Pool {
  std::string id;
  std::string name;
  std::vector<Lane> lanes;
  /// Nodes that belong to the pool without being placed in one of its lanes.
  std::vector<std::string> members;
};

struct MessageFlow {
  std::string id;
  std::string source;
  std::string target;
  std::optional<std::string> label;
};

struct ProcessModel {
  std::string id = "process";
  std::optional<std::string> name;
  std::vector<Node> nodes;
  std::vector<SequenceFlow> sequence_flows;
  std::vector<Pool> pools;
  std::vector<MessageFlow> message_flows;

  const Node* find_node(std::string_view node_id) const;
  bool empty() const { return nodes.empty() && sequence_flows.empty() && pools.empty() && message_flows.empty(); }
};

/// Where a node sits in the pool/lane hierarchy.
struct Placement {
  std::optional<std::size_t> pool;
  std::optional<std::size_t> lane;  // index into pools[*pool].lanes
};

/// Node id -> placement. Nodes outside every pool are absent from the map.
std::unordered_map<std::string, Placement> placements(const ProcessModel& model);

// ---------------------------------------------------------------------------
// Element taxonomy

enum class ElementType {
  task,
  start_event,
  intermediate_event,
  end_event,
  exclusive_gateway,
  parallel_gateway,
  sequence_flow,
  condition,
  decision,
  pool,
  lane,
  message_flow,
};

inline constexpr std::size_t kElementTypeCount = 12;
inline constexpr std::array<ElementType, kElementTypeCount> kAllElementTypes = {
    ElementType::task,           ElementType::start_event,       ElementType::intermediate_event,
    ElementType::end_event,      ElementType::exclusive_gateway, ElementType::parallel_gateway,
    ElementType::sequence_flow,  ElementType::condition,         ElementType::decision,
    ElementType::pool,           ElementType::lane,              ElementType::message_flow,
};

std::string_view to_string(ElementType type);
std::optional<ElementType> element_type_from_string(std::string_view text);
ElementType element_type(const Node& node);

class ElementTypeSet {
 public:
  ElementTypeSet() = default;
  ElementTypeSet(std::initializer_list<ElementType> types) {
    for (ElementType t : types) insert(t);
  }
  static ElementTypeSet all() {
    ElementTypeSet s;
    s.bits_.set();
    return s;
  }

  void insert(ElementType t) { bits_.set(static_cast<std::size_t>(t)); }
  void erase(ElementType t) { bits_.reset(static_cast<std::size_t>(t)); }
  bool contains(ElementType t) const { return bits_.test(static_cast<std::size_t>(t)); }
  std::size_t size() const { return bits_.count(); }
  bool operator==(const ElementTypeSet&) const = default;

 private:
  std::bitset<kElementTypeCount> bits_;
};

/// Per-type element counts plus the aggregates used in reports.
class ElementCounts {
 public:
  long& operator[](ElementType t) { return counts_[static_cast<std::size_t>(t)]; }
  long operator[](ElementType t) const { return counts_[static_cast<std::size_t>(t)]; }

  long events() const;
  long gateways() const;
  /// Tasks + events + gateways. Sequence flows are deliberately excluded.
  long nodes() const;
  long swimlanes() const;
  /// Every countable element: nodes, flows, conditions, decisions, pools, lanes, message flows.
  long total() const;

  ElementCounts operator-(const ElementCounts& other) const;
  bool operator==(const ElementCounts&) const = default;

 private:
  std::array<long, kElementTypeCount> counts_{};
};

ElementCounts count_elements(const ProcessModel& model);

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  enum class Kind {
    duplicate_id,
    invalid_identifier,
    dangling_reference,
    message_flow_within_pool,
    multiple_lane_assignment,
  };
  Kind kind;
  std::string element_id;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::string_view to_string(Violation::Kind kind);

/// All invariant violations of `model`; empty iff the model is well-formed.
std::vector<Violation> validate(const ProcessModel& model);
inline bool is_well_formed(const ProcessModel& model) { return validate(model).empty(); }

/// `[A-Za-z_][A-Za-z0-9_-]*`
bool is_valid_identifier(std::string_view id);

/// Produces identifiers in the canonical alphabet that are unique within one allocator.
class IdAllocator {
 public:
  void reserve(const std::string& id) { used_.insert(id); }
  bool contains(const std::string& id) const { return used_.count(id) != 0; }
  /// Sanitizes `base` into the identifier alphabet (restricted to `[A-Za-z0-9_]` when `strict`)
  /// and appends a numeric suffix until the result is unused.
  std::string make(std::string_view base, bool strict = false);
  /// `prefix_1`, `prefix_2`, ... skipping used ids.
  std::string next(std::string_view prefix);

 private:
  std::set<std::string> used_;
  std::map<std::string, std::size_t, std::less<>> counters_;
};

// ---------------------------------------------------------------------------
// Equality

/// Trim and collapse internal whitespace; case is preserved.
std::string normalize_label(std::string_view text);
/// Normalized label, with empty results treated as absent.
std::optional<std::string> clean_label(const std::optional<std::string>& label);

/// True iff an identifier bijection maps `a` onto `b` (labels compared after normalization).
bool canonical_equal(const ProcessModel& a, const ProcessModel& b);

// ---------------------------------------------------------------------------
// Loss bookkeeping and projection

/// An element that a conversion could not carry over.
struct Loss {
  ElementType type;
  std::string element_id;
  std::string reason;
  bool operator==(const Loss&) const = default;
};

/// Drops every element whose type is outside `supported`. Removed nodes are bypassed: each
/// predecessor is reconnected to each successor. Every removal is appended to `losses`.
ProcessModel restrict_to(const ProcessModel& model, const ElementTypeSet& supported,
                         std::vector<Loss>* losses = nullptr);

/// Removes the listed nodes, reconnecting predecessors to successors.
ProcessModel bypass_nodes(const ProcessModel& model, const std::set<std::string>& node_ids);

}  // namespace pmrkit
