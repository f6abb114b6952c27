#pragma once

// Block-structure analysis: reduces a flow graph to a branch tree and expands trees back.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmrkit/model.hpp"

namespace pmrkit {

struct BranchTree;

/// One alternative of an Exclusive/Parallel block. An empty `steps` list is a direct flow.
struct Branch {
  std::optional<std::string> condition;
  std::vector<BranchTree> steps;

  bool operator==(const Branch&) const;
};

/// Recursive block view of a process.
///
/// A looping Exclusive models `join -> do -> split` with a back edge. Its first branch holds the
/// `do` part and carries the exit condition; the optional second branch holds the `redo` part
/// (run on the way back to the join) and carries the repeat condition.
///
/// Start/end EventMarkers may only appear as the first/last child of the root Sequence; they
/// carry the labels of the start and end events. Intermediate markers may appear anywhere.
struct BranchTree {
  enum class Kind { sequence, activity, event, exclusive, parallel };

  Kind kind = Kind::sequence;
  /// Activity/event label, or the decision of an Exclusive.
  std::optional<std::string> label;
  EventPosition position = EventPosition::intermediate;
  bool looping = false;
  std::vector<BranchTree> children;  // sequence only
  std::vector<Branch> branches;      // exclusive/parallel only

  static BranchTree sequence(std::vector<BranchTree> children);
  static BranchTree activity(std::optional<std::string> label);
  static BranchTree event(EventPosition position, std::optional<std::string> label = std::nullopt);
  static BranchTree exclusive(std::vector<Branch> branches, std::optional<std::string> decision = std::nullopt);
  static BranchTree loop(Branch body, std::optional<Branch> redo = std::nullopt,
                         std::optional<std::string> decision = std::nullopt);
  static BranchTree parallel(std::vector<Branch> branches);

  bool operator==(const BranchTree&) const;
};

/// Checks the tree invariants; returns a description of the first violation.
std::optional<std::string> check_tree(const BranchTree& tree);

struct ConvertibilityVerdict {
  enum class Reason {
    multiple_start_events,
    multiple_end_events,
    unmatched_gateway_pair,
    irreducible_cycle,
    crossing_branches,
    has_pools,
    has_message_flows,
  };
  bool convertible = true;
  std::optional<Reason> reason;
};

std::string_view to_string(ConvertibilityVerdict::Reason reason);

struct StructureResult {
  std::optional<BranchTree> tree;
  ConvertibilityVerdict verdict;
  /// Information the tree cannot carry (non-branch conditions, join labels, dissolved gateways).
  std::vector<Loss> losses;
};

/// Iterative reduction: chains fuse into sequences, matched split/join pairs collapse into blocks,
/// join -> body -> split cycles with one back edge collapse into loops.
StructureResult to_branch_tree(const ProcessModel& model);

/// One start event, one end event, a split/join gateway pair per block.
ProcessModel expand(const BranchTree& tree);

/// Flattens nested sequences (the root is always a Sequence, nested ones are spliced away) and
/// orders the branches of non-looping blocks deterministically. Idempotent.
BranchTree canonicalize(const BranchTree& tree);

/// Deterministic text rendering, used for ordering and diagnostics.
std::string describe(const BranchTree& tree);

/// 64-bit FNV-1a of the rendering.
std::uint64_t structural_hash(const BranchTree& tree);

}  // namespace pmrkit
