#include <json.hpp>

#include "codec_internal.hpp"
#include "json_schema.hpp"
#include "pmrkit/errors.hpp"
#include "pmrkit/xml.hpp"

namespace pmrkit {

namespace {

using K = BranchTree::Kind;

struct TreeRestrictor {
  bool keep_intermediate_events;
  bool keep_marker_labels;
  bool keep_conditions;
  bool keep_decisions;
  bool keep_empty_parallel_branches;
  std::vector<Loss>* losses;

  void lose(ElementType type, const std::string& path, const char* reason) const {
    if (losses) losses->push_back({type, path, reason});
  }

  std::vector<BranchTree> steps(const std::vector<BranchTree>& in, const std::string& path) const {
    std::vector<BranchTree> out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      std::string p = path + "/" + std::to_string(i);
      const BranchTree& s = in[i];
      if (s.kind == K::event && s.position == EventPosition::intermediate && !keep_intermediate_events) {
        lose(ElementType::intermediate_event, p, "intermediate events are not representable");
        continue;
      }
      if (s.kind == K::event && s.position != EventPosition::intermediate && !keep_marker_labels) {
        if (s.label)
          lose(s.position == EventPosition::start ? ElementType::start_event : ElementType::end_event, p,
               "event labels are not representable");
        continue;
      }
      BranchTree r = node(s, p);
      if (r.kind == K::sequence) {
        for (BranchTree& c : r.children) out.push_back(std::move(c));
      } else {
        out.push_back(std::move(r));
      }
    }
    return out;
  }

  BranchTree node(const BranchTree& t, const std::string& path) const {
    if (t.kind == K::sequence) return BranchTree::sequence(steps(t.children, path));
    if (t.kind == K::activity || t.kind == K::event) return t;
    BranchTree r = t;
    if (t.kind == K::exclusive && t.label && !keep_decisions) {
      lose(ElementType::decision, path, "decisions are not representable");
      r.label.reset();
    }
    r.branches.clear();
    for (std::size_t i = 0; i < t.branches.size(); ++i) {
      std::string p = path + "/b" + std::to_string(i);
      Branch b;
      b.condition = t.branches[i].condition;
      if (b.condition && !keep_conditions) {
        lose(ElementType::condition, p, "conditions are not representable");
        b.condition.reset();
      }
      b.steps = steps(t.branches[i].steps, p);
      if (t.kind == K::parallel && b.steps.empty() && !keep_empty_parallel_branches) {
        lose(ElementType::sequence_flow, p, "an empty parallel branch is not representable");
        continue;
      }
      r.branches.push_back(std::move(b));
    }
    if (t.kind == K::parallel && r.branches.size() < 2) {
      lose(ElementType::parallel_gateway, path, "parallel block with fewer than two branches dissolved");
      lose(ElementType::parallel_gateway, path, "parallel block with fewer than two branches dissolved");
      if (r.branches.empty()) return BranchTree::sequence({});
      return BranchTree::sequence(std::move(r.branches.front().steps));
    }
    return r;
  }
};

}  // namespace

BranchTree restrict_tree(const BranchTree& tree, PmrId pmr, std::vector<Loss>* losses) {
  const ElementTypeSet& s = capabilities(pmr).supported;
  bool markers = pmr != PmrId::powl_code && pmr != PmrId::bpmn_text && pmr != PmrId::json_branches;
  TreeRestrictor r{s.contains(ElementType::intermediate_event), markers, s.contains(ElementType::condition),
                   s.contains(ElementType::decision), pmr != PmrId::powl_code, losses};
  BranchTree root = canonicalize(tree);
  // Start/end markers live only at the root.
  std::vector<BranchTree> children;
  for (std::size_t i = 0; i < root.children.size(); ++i) {
    const BranchTree& c = root.children[i];
    if (c.kind == K::event && c.position != EventPosition::intermediate) {
      if (markers) {
        children.push_back(c);
      } else if (c.label) {
        r.lose(c.position == EventPosition::start ? ElementType::start_event : ElementType::end_event,
               "/" + std::to_string(i), "event labels are not representable");
      }
      continue;
    }
    for (BranchTree& x : r.steps({c}, "/" + std::to_string(i))) children.push_back(std::move(x));
  }
  return canonicalize(BranchTree::sequence(std::move(children)));
}

namespace detail {

// ---------------------------------------------------------------------------
// BPMN text

namespace {

void write_steps(xml::Writer& w, const std::vector<BranchTree>& steps);

void write_step(xml::Writer& w, const BranchTree& t) {
  using Attrs = std::vector<std::pair<std::string, std::string>>;
  switch (t.kind) {
    case K::sequence: write_steps(w, t.children); return;
    case K::event: return;
    case K::activity: {
      Attrs a;
      if (t.label) a.emplace_back("name", normalize_label(*t.label));
      w.leaf("task", a);
      return;
    }
    case K::exclusive:
      if (t.looping) {
        Attrs a;
        if (t.label) a.emplace_back("decision", normalize_label(*t.label));
        if (t.branches[0].condition) a.emplace_back("condition", normalize_label(*t.branches[0].condition));
        const bool has_redo = t.branches.size() > 1;
        if (t.branches[0].steps.empty() && !has_redo) {
          w.leaf("loop", a);
          return;
        }
        w.open("loop", a);
        write_steps(w, t.branches[0].steps);
        if (has_redo) {
          Attrs r;
          if (t.branches[1].condition) r.emplace_back("condition", normalize_label(*t.branches[1].condition));
          if (t.branches[1].steps.empty()) {
            w.leaf("redo", r);
          } else {
            w.open("redo", r);
            write_steps(w, t.branches[1].steps);
            w.close();
          }
        }
        w.close();
        return;
      }
      [[fallthrough]];
    case K::parallel: {
      Attrs a;
      if (t.kind == K::exclusive && t.label) a.emplace_back("decision", normalize_label(*t.label));
      w.open(t.kind == K::exclusive ? "xor" : "and", a);
      for (const Branch& b : t.branches) {
        Attrs ba;
        if (b.condition) ba.emplace_back("condition", normalize_label(*b.condition));
        if (b.steps.empty()) {
          w.leaf("branch", ba);
        } else {
          w.open("branch", ba);
          write_steps(w, b.steps);
          w.close();
        }
      }
      w.close();
      return;
    }
  }
}

void write_steps(xml::Writer& w, const std::vector<BranchTree>& steps) {
  for (const BranchTree& s : steps) write_step(w, s);
}

[[noreturn]] void text_error(const xml::Element& e, const std::string& message, const std::string& expected) {
  throw ParseError("BPMN text: " + message, e.line, e.column, expected);
}

std::vector<BranchTree> read_steps(const xml::Element& parent, bool allow_redo);

BranchTree read_block(const xml::Element& e) {
  std::vector<Branch> branches;
  for (const xml::Element& c : e.children) {
    if (c.local_name() != "branch") text_error(c, "unexpected <" + c.name + "> inside <" + e.name + ">", "<branch>");
    Branch b;
    if (e.local_name() == "xor") b.condition = clean_label(c.optional_attribute("condition"));
    b.steps = read_steps(c, false);
    branches.push_back(std::move(b));
  }
  if (e.local_name() == "and") {
    if (branches.size() == 1) return BranchTree::sequence(std::move(branches.front().steps));
    if (branches.empty()) return BranchTree::sequence({});
    return BranchTree::parallel(std::move(branches));
  }
  // A lone branch is an optional part: the missing alternative skips it.
  if (branches.size() == 1) branches.emplace_back();
  if (branches.empty()) text_error(e, "<xor> without branches", "<branch>");
  return BranchTree::exclusive(std::move(branches), clean_label(e.optional_attribute("decision")));
}

BranchTree read_step(const xml::Element& e) {
  std::string_view name = e.local_name();
  if (name == "task") return BranchTree::activity(clean_label(e.optional_attribute("name")));
  if (name == "xor" || name == "and") return read_block(e);
  if (name == "loop") {
    Branch body{clean_label(e.optional_attribute("condition")), read_steps(e, true)};
    std::optional<Branch> redo;
    for (const xml::Element& c : e.children)
      if (c.local_name() == "redo") redo = Branch{clean_label(c.optional_attribute("condition")), read_steps(c, false)};
    return BranchTree::loop(std::move(body), std::move(redo), clean_label(e.optional_attribute("decision")));
  }
  text_error(e, "unknown element <" + e.name + ">", "<task>, <xor>, <and> or <loop>");
}

std::vector<BranchTree> read_steps(const xml::Element& parent, bool allow_redo) {
  std::vector<BranchTree> out;
  for (const xml::Element& c : parent.children) {
    if (allow_redo && c.local_name() == "redo") continue;
    BranchTree t = read_step(c);
    if (t.kind == K::sequence)
      out.insert(out.end(), t.children.begin(), t.children.end());
    else
      out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::string encode_bpmn_text(const BranchTree& tree) {
  BranchTree t = restrict_tree(tree, PmrId::bpmn_text);
  xml::Writer w(false);
  if (t.children.empty()) {
    w.leaf("process");
  } else {
    w.open("process");
    write_steps(w, t.children);
    w.close();
  }
  return w.str();
}

BranchTree decode_bpmn_text(std::string_view text) {
  xml::Element root = xml::parse(text);
  if (root.local_name() != "process") text_error(root, "unexpected root <" + root.name + ">", "<process>");
  return canonicalize(BranchTree::sequence(read_steps(root, false)));
}

// ---------------------------------------------------------------------------
// JSON branches

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json steps_json(const std::vector<BranchTree>& steps);

ordered_json step_json(const BranchTree& t) {
  ordered_json j;
  if (t.kind == K::activity) {
    j["type"] = "task";
    j["name"] = t.label ? normalize_label(*t.label) : "";
    return j;
  }
  j["type"] = t.kind == K::parallel ? "parallel" : "exclusive";
  if (t.kind == K::exclusive && t.label) j["decision"] = normalize_label(*t.label);
  if (t.looping) j["looping"] = true;
  j["branches"] = ordered_json::array();
  for (const Branch& b : t.branches) {
    ordered_json bj;
    if (b.condition && t.kind == K::exclusive) bj["condition"] = normalize_label(*b.condition);
    bj["steps"] = steps_json(b.steps);
    j["branches"].push_back(std::move(bj));
  }
  return j;
}

ordered_json steps_json(const std::vector<BranchTree>& steps) {
  ordered_json arr = ordered_json::array();
  for (const BranchTree& s : steps) {
    if (s.kind == K::event) continue;
    if (s.kind == K::sequence) {
      for (auto& x : steps_json(s.children)) arr.push_back(x);
      continue;
    }
    arr.push_back(step_json(s));
  }
  return arr;
}

std::vector<BranchTree> read_json_steps(const json& arr, const std::string& path);

BranchTree read_json_step(const json& j, const std::string& path) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "task") {
    return BranchTree::activity(clean_label(j.at("name").get<std::string>()));
  }
  std::vector<Branch> branches;
  const json& bs = j.at("branches");
  for (std::size_t i = 0; i < bs.size(); ++i) {
    Branch b;
    if (bs[i].contains("condition")) b.condition = clean_label(bs[i]["condition"].get<std::string>());
    b.steps = read_json_steps(bs[i].at("steps"), path + "/branches/" + std::to_string(i) + "/steps");
    branches.push_back(std::move(b));
  }
  if (type == "parallel") return BranchTree::parallel(std::move(branches));
  std::optional<std::string> decision;
  if (j.contains("decision")) decision = clean_label(j["decision"].get<std::string>());
  if (j.value("looping", false)) {
    if (branches.size() > 2) throw SchemaViolation(path + "/branches", "a looping block has at most two branches");
    std::optional<Branch> redo;
    if (branches.size() == 2) redo = std::move(branches[1]);
    return BranchTree::loop(std::move(branches[0]), std::move(redo), decision);
  }
  // A lone branch is an optional part: the missing alternative skips it.
  if (branches.size() == 1) branches.emplace_back();
  return BranchTree::exclusive(std::move(branches), decision);
}

std::vector<BranchTree> read_json_steps(const json& arr, const std::string& path) {
  std::vector<BranchTree> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(read_json_step(arr[i], path + "/" + std::to_string(i)));
  return out;
}

}  // namespace

std::string encode_json_branches(const BranchTree& tree) {
  BranchTree t = restrict_tree(tree, PmrId::json_branches);
  return steps_json(t.children).dump(2) + "\n";
}

BranchTree decode_json_branches(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("JSON branches: ") + e.what(), 0, 0, "a JSON array of steps");
  }
  // Some generators wrap the array in an object; accept a single array-valued member.
  if (doc.is_object() && doc.size() == 1 && doc.begin()->is_array()) doc = json(*doc.begin());
  static const json schema = json::parse(shipped_schema(PmrId::json_branches));
  validate_schema(doc, schema);
  return canonicalize(BranchTree::sequence(read_json_steps(doc, "")));
}

}  // namespace detail

}  // namespace pmrkit
