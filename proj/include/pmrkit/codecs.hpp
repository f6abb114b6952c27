#pragma once

// Codecs between the canonical model and the nine textual representations.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmrkit/model.hpp"
#include "pmrkit/structure.hpp"

namespace pmrkit {

enum class PmrId {
  bpmn,
  bpmn_process,
  graphviz,
  mermaid,
  pme,
  simplified_xml,
  powl_code,
  bpmn_text,
  json_branches,
};

inline constexpr std::array<PmrId, 9> kAllPmrs = {
    PmrId::bpmn,           PmrId::bpmn_process, PmrId::graphviz,  PmrId::mermaid,       PmrId::pme,
    PmrId::simplified_xml, PmrId::powl_code,    PmrId::bpmn_text, PmrId::json_branches,
};

std::string_view to_string(PmrId pmr);
std::optional<PmrId> pmr_from_string(std::string_view text);
/// File suffix including the leading dot, e.g. ".pme.json".
std::string_view file_extension(PmrId pmr);
/// Longest matching suffix wins, so "x.pme.json" is PME rather than anything ending in ".json".
std::optional<PmrId> pmr_from_path(std::string_view path);

struct PmrCapabilities {
  PmrId pmr;
  ElementTypeSet supported;
  bool graph_based = false;
  bool branch_based = false;
  bool has_generation_schema = false;
  /// Encoding goes through a BranchTree, so the model must be block-structured.
  bool requires_block_structure = false;
  bool executable = false;
  bool visualizable = false;
};

const PmrCapabilities& capabilities(PmrId pmr);

struct PmrDocument {
  PmrId pmr = PmrId::bpmn;
  std::string text;
  std::vector<Loss> loss_report;
  /// Model id -> identifier used in the document, for codecs with a narrower id alphabet.
  std::map<std::string, std::string> renamed_ids;
};

/// Throws NotConvertibleError for block-structured PMRs when the model does not reduce.
PmrDocument encode(const ProcessModel& model, PmrId pmr);

struct DecodeOptions {
  /// Turns recoverable irregularities (e.g. undeclared edge endpoints) into ParseErrors.
  bool strict = false;
};

struct DecodeResult {
  ProcessModel model;
  std::vector<std::string> warnings;
};

/// Throws ParseError, SchemaViolation, ResolutionError or UnsupportedElementError.
DecodeResult decode(std::string_view text, PmrId pmr, const DecodeOptions& options = {});
inline DecodeResult decode(const PmrDocument& doc, const DecodeOptions& options = {}) {
  return decode(doc.text, doc.pmr, options);
}

// ---------------------------------------------------------------------------
// PME

struct PmeTask {
  std::string id;
  std::optional<std::string> label;
  std::optional<std::string> lane;
  std::optional<std::string> pool;
  bool operator==(const PmeTask&) const = default;
};

struct PmeEvent {
  std::string id;
  EventPosition position = EventPosition::start;
  std::optional<std::string> label;
  std::optional<std::string> lane;
  std::optional<std::string> pool;
  bool operator==(const PmeEvent&) const = default;
};

struct PmeGateway {
  std::string id;
  GatewayType type = GatewayType::exclusive;
  std::optional<std::string> decision;
  std::optional<std::string> lane;
  std::optional<std::string> pool;
  bool operator==(const PmeGateway&) const = default;
};

struct PmeLane {
  std::string id;
  std::string name;
  bool operator==(const PmeLane&) const = default;
};

struct PmeSwimlane {
  std::string id;
  std::string name;
  std::vector<PmeLane> lanes;
  bool operator==(const PmeSwimlane&) const = default;
};

struct PmeSequenceFlow {
  std::string source;
  std::string target;
  std::optional<std::string> condition;
  bool operator==(const PmeSequenceFlow&) const = default;
};

struct PmeMessageFlow {
  std::string source;
  std::string target;
  std::optional<std::string> label;
  bool operator==(const PmeMessageFlow&) const = default;
};

struct PmeBundle {
  std::vector<PmeTask> tasks;
  std::vector<PmeEvent> events;
  std::vector<PmeGateway> gateways;
  std::vector<PmeSwimlane> swimlanes;
  std::vector<PmeSequenceFlow> sequence_flows;
  std::vector<PmeMessageFlow> message_flows;
  bool operator==(const PmeBundle&) const = default;
};

PmeBundle to_pme(const ProcessModel& model);
/// Throws ResolutionError when a record references an unknown node, lane or pool.
ProcessModel from_pme(const PmeBundle& bundle);

std::string pme_to_json(const PmeBundle& bundle);
/// Validates against the shipped schema first; throws ParseError or SchemaViolation.
PmeBundle pme_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Block-structured representations

/// Removes what `pmr` cannot express from a tree, recording each removal.
BranchTree restrict_tree(const BranchTree& tree, PmrId pmr, std::vector<Loss>* losses = nullptr);
/// Renders a tree already restricted to `pmr`.
std::string encode_tree(const BranchTree& tree, PmrId pmr);
/// Parses a branch document into its (canonicalized) tree.
BranchTree decode_tree(std::string_view text, PmrId pmr);

/// The shipped JSON schema text for PME or JSON branches documents.
std::string_view shipped_schema(PmrId pmr);

}  // namespace pmrkit
