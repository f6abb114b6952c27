#include <algorithm>
#include <cctype>
#include <set>

#include "codec_internal.hpp"
#include "pmrkit/errors.hpp"

namespace pmrkit::detail {

namespace {

const std::set<std::string> kReserved = {"end",   "graph", "subgraph", "flowchart", "style",    "class",
                                         "click", "call",  "classDef", "linkStyle", "direction", "href"};

bool is_reserved(const std::string& id) {
  std::string lower;
  for (char c : id) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const std::string& r : kReserved) {
    std::string rl;
    for (char c : r) rl += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == rl) return true;
  }
  return false;
}

bool safe_unquoted(const std::string& text) {
  if (text.empty()) return true;
  if (text.front() == '/' || text.front() == '\\' || text.front() == ' ') return false;
  if (text.find("--") != std::string::npos || text.find("==") != std::string::npos) return false;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == ' ') continue;
    if (std::string_view("_.,:?!'-&+*=@$").find(static_cast<char>(c)) != std::string_view::npos) continue;
    return false;
  }
  return true;
}

std::string render_text(const std::optional<std::string>& label) {
  std::string text = label ? normalize_label(*label) : std::string();
  if (text.empty()) return " ";
  if (safe_unquoted(text)) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"')
      out += "#quot;";
    else if (c == '#')
      out += "#35;";
    else if (c == '|')
      out += "#124;";
    else if (c == '%')
      out += "#37;";
    else
      out += c;
  }
  return out + "\"";
}

std::string decode_entities(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '#') {
      std::size_t semi = text.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 8) {
        std::string_view name = text.substr(i + 1, semi - i - 1);
        std::optional<unsigned long> code;
        if (name == "quot") code = '"';
        if (name == "amp") code = '&';
        if (name == "lt") code = '<';
        if (name == "gt") code = '>';
        if (name == "nbsp") code = ' ';
        if (!name.empty() && std::all_of(name.begin(), name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
          code = std::stoul(std::string(name));
        if (code) {
          unsigned long cp = *code;
          if (cp < 0x80) {
            out += static_cast<char>(cp);
          } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
          } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
          } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
          }
          i = semi;
          continue;
        }
      }
    }
    out += text[i];
  }
  return out;
}

}  // namespace

std::string encode_mermaid(const ProcessModel& model, std::map<std::string, std::string>* renamed) {
  IdAllocator ids;
  std::map<std::string, std::string> id_of;
  for (const Node& n : model.nodes) {
    std::string base = n.id;
    bool plain = !base.empty() && !std::isdigit(static_cast<unsigned char>(base.front()));
    for (char c : base) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
    if (plain && !is_reserved(base) && !ids.contains(base)) {
      ids.reserve(base);
      id_of[n.id] = base;
    }
  }
  for (const Node& n : model.nodes) {
    if (id_of.count(n.id)) continue;
    std::string id = ids.make(n.id, true);
    while (is_reserved(id)) id = ids.make(id + "_", true);
    id_of[n.id] = id;
    if (renamed) (*renamed)[n.id] = id;
  }

  std::set<std::string> has_incoming, has_outgoing;
  for (const SequenceFlow& f : model.sequence_flows) {
    has_outgoing.insert(f.source);
    has_incoming.insert(f.target);
  }

  std::string out = "flowchart TD\n";
  for (const Node& n : model.nodes) {
    out += "    " + id_of[n.id];
    std::string text = render_text(n.label);
    switch (n.kind) {
      case NodeKind::task: out += "[" + text + "]"; break;
      case NodeKind::event:
        if (n.position == EventPosition::end) {
          out += "(((" + text + ")))";
          break;
        }
        out += "((" + text + "))";
        // A plain circle reads as a start without incoming flows and as an intermediate event otherwise.
        if (n.position == EventPosition::start && has_incoming.count(n.id)) out += ":::start";
        if (n.position == EventPosition::intermediate && !(has_incoming.count(n.id) && has_outgoing.count(n.id)))
          out += ":::intermediate";
        break;
      case NodeKind::gateway:
        out += n.gateway_type == GatewayType::parallel ? "{{" + text + "}}" : "{" + text + "}";
        break;
    }
    out += '\n';
  }
  for (const SequenceFlow& f : model.sequence_flows) {
    out += "    " + id_of[f.source] + " -->";
    if (auto c = clean_label(f.condition)) out += "|" + render_text(c) + "|";
    out += " " + id_of[f.target] + "\n";
  }
  return out;
}

namespace {

class MermaidParser {
 public:
  MermaidParser(std::string_view text, GraphBuilder& graph) : text_(text), graph_(graph) {}

  std::vector<std::string> run() {
    std::vector<std::string> warnings;
    bool header = false;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text_.size()) {
      std::size_t nl = text_.find('\n', start);
      if (nl == std::string_view::npos) nl = text_.size();
      ++line_no;
      line_ = line_no;
      std::string_view line = text_.substr(start, nl - start);
      start = nl + 1;
      if (auto c = line.find("%%"); c != std::string_view::npos) line = line.substr(0, c);
      std::string_view trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (!header) {
        std::string_view first = trimmed.substr(0, trimmed.find_first_of(" \t;"));
        if (first == "flowchart" || first == "graph") {
          header = true;
          std::size_t semi = trimmed.find(';');
          if (semi == std::string_view::npos) continue;
          trimmed = trim(trimmed.substr(semi + 1));
          if (trimmed.empty()) continue;
        } else {
          header = true;
          warnings.push_back("mermaid: missing 'flowchart' header");
        }
      }
      if (skip_line(trimmed)) continue;
      parse_line(trimmed);
    }
    return warnings;
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  static bool skip_line(std::string_view line) {
    std::string_view word = line.substr(0, line.find_first_of(" \t;"));
    return word == "subgraph" || word == "end" || word == "classDef" || word == "class" || word == "style" ||
           word == "linkStyle" || word == "click" || word == "direction" || word == "accTitle" ||
           word == "accDescr" || word.rfind("accTitle:", 0) == 0 || word.rfind("accDescr:", 0) == 0;
  }

  [[noreturn]] void fail(const std::string& message, const std::string& expected) const {
    throw ParseError("mermaid: " + message, line_, pos_ + 1, expected);
  }

  void skip_spaces() {
    while (pos_ < cur_.size() && std::isspace(static_cast<unsigned char>(cur_[pos_]))) ++pos_;
  }

  bool at_end() const { return pos_ >= cur_.size(); }

  bool starts(std::string_view s) const { return cur_.substr(pos_, s.size()) == s; }

  void parse_line(std::string_view line) {
    cur_ = line;
    pos_ = 0;
    while (true) {
      skip_spaces();
      if (at_end()) return;
      if (cur_[pos_] == ';') {
        ++pos_;
        continue;
      }
      parse_statement();
    }
  }

  void parse_statement() {
    std::vector<std::string> left = node_group();
    for (;;) {
      skip_spaces();
      if (at_end() || cur_[pos_] == ';') return;
      std::optional<std::string> text;
      if (!link(text)) fail("unexpected character '" + std::string(1, cur_[pos_]) + "'", "an arrow such as '-->'");
      skip_spaces();
      if (!at_end() && cur_[pos_] == '|') {
        ++pos_;
        std::size_t close = cur_.find('|', pos_);
        if (close == std::string_view::npos) fail("unterminated edge text", "'|'");
        text = unquote(cur_.substr(pos_, close - pos_));
        pos_ = close + 1;
      }
      std::vector<std::string> right = node_group();
      for (const std::string& a : left)
        for (const std::string& b : right) graph_.edge(a, b, text);
      left = std::move(right);
    }
  }

  std::vector<std::string> node_group() {
    std::vector<std::string> ids{node()};
    for (;;) {
      std::size_t save = pos_;
      skip_spaces();
      if (!at_end() && cur_[pos_] == '&') {
        ++pos_;
        ids.push_back(node());
      } else {
        pos_ = save;
        return ids;
      }
    }
  }

  std::string node() {
    skip_spaces();
    std::size_t begin = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(cur_[pos_])) || cur_[pos_] == '_' ||
                         static_cast<unsigned char>(cur_[pos_]) >= 0x80))
      ++pos_;
    // Ids may contain single dashes ("check-stock") but never an arrow.
    while (!at_end() && cur_[pos_] == '-' && pos_ + 1 < cur_.size() &&
           (std::isalnum(static_cast<unsigned char>(cur_[pos_ + 1])) || cur_[pos_ + 1] == '_')) {
      ++pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(cur_[pos_])) || cur_[pos_] == '_')) ++pos_;
    }
    if (pos_ == begin) fail("expected a node id", "a node id");
    std::string id(cur_.substr(begin, pos_ - begin));
    shape(id);
    if (starts(":::")) {
      pos_ += 3;
      const std::size_t name = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(cur_[pos_])) || cur_[pos_] == '_' || cur_[pos_] == '-'))
        ++pos_;
      const std::string_view cls = cur_.substr(name, pos_ - name);
      if (last_shape_ == Shape::event && (cls == "start" || cls == "intermediate" || cls == "end"))
        graph_.declare(id, cls == "start" ? Shape::start_event : cls == "end" ? Shape::end_event : Shape::intermediate_event,
                       last_label_);
    }
    return id;
  }

  void shape(const std::string& id) {
    last_shape_.reset();
    struct Form {
      std::string_view open, close;
      Shape shape;
    };
    static const Form forms[] = {
        {"(((", ")))", Shape::end_event}, {"((", "))", Shape::event},  {"([", "])", Shape::task},
        {"[[", "]]", Shape::task},        {"[(", ")]", Shape::task},   {"{{", "}}", Shape::parallel},
        {"[/", "/]", Shape::task},        {"[/", "\\]", Shape::task},  {"[\\", "\\]", Shape::task},
        {"[\\", "/]", Shape::task},       {"[", "]", Shape::task},     {"(", ")", Shape::task},
        {"{", "}", Shape::exclusive},     {">", "]", Shape::task},
    };
    for (const Form& f : forms) {
      if (!starts(f.open)) continue;
      std::size_t body = pos_ + f.open.size();
      std::size_t close;
      if (body < cur_.size() && cur_[body] == '"') {
        std::size_t q = cur_.find('"', body + 1);
        if (q == std::string_view::npos) continue;
        close = q + 1;
        if (cur_.substr(close, f.close.size()) != f.close) {
          std::size_t trailing = cur_.find(f.close, close);
          if (trailing == std::string_view::npos) continue;
          close = trailing;
        }
      } else {
        close = cur_.find(f.close, body);
        if (close == std::string_view::npos) continue;
      }
      std::string label = unquote(cur_.substr(body, close - body));
      pos_ = close + f.close.size();
      graph_.declare(id, f.shape, label);
      last_shape_ = f.shape;
      last_label_ = label;
      return;
    }
  }

  static std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return decode_entities(s);
  }

  /// Consumes one link token. `text` receives inline link text (`-- text -->`).
  bool link(std::optional<std::string>& text) {
    std::size_t begin = pos_;
    if (!at_end() && (cur_[pos_] == '<' || cur_[pos_] == 'o' || cur_[pos_] == 'x')) {
      // Bidirectional heads such as "<-->" or "o--o".
      if (pos_ + 1 < cur_.size() && (cur_[pos_ + 1] == '-' || cur_[pos_ + 1] == '=')) ++pos_;
    }
    std::size_t run_begin = pos_;
    while (!at_end() && (cur_[pos_] == '-' || cur_[pos_] == '=' || cur_[pos_] == '.')) ++pos_;
    std::string_view run = cur_.substr(run_begin, pos_ - run_begin);
    if (run.size() < 2 || run.find_first_of("-=") == std::string_view::npos) {
      pos_ = begin;
      return false;
    }
    if (!at_end() && cur_[pos_] == '>') {
      ++pos_;
      return true;
    }
    if (!at_end() && (cur_[pos_] == 'o' || cur_[pos_] == 'x') &&
        (pos_ + 1 == cur_.size() || std::isspace(static_cast<unsigned char>(cur_[pos_ + 1])))) {
      ++pos_;
      return true;
    }
    if ((run == "--" || run == "==" || run == "-.") && !at_end() && std::isspace(static_cast<unsigned char>(cur_[pos_]))) {
      // "-- text -->": the text runs until the closing arrow.
      std::size_t search = pos_;
      while (search < cur_.size()) {
        std::size_t cand = cur_.find_first_of("-=.", search);
        if (cand == std::string_view::npos) break;
        std::size_t end = cand;
        while (end < cur_.size() && (cur_[end] == '-' || cur_[end] == '=' || cur_[end] == '.')) ++end;
        std::string_view closing = cur_.substr(cand, end - cand);
        bool arrow = end < cur_.size() && cur_[end] == '>';
        if ((closing.size() >= 2 && closing.find_first_of("-=") != std::string_view::npos && arrow) ||
            closing.size() >= 3) {
          text = unquote(cur_.substr(pos_, cand - pos_));
          pos_ = end + (arrow ? 1 : 0);
          return true;
        }
        search = end;
      }
      pos_ = begin;
      return false;
    }
    return true;
  }

  std::string_view text_;
  GraphBuilder& graph_;
  std::optional<Shape> last_shape_;
  std::optional<std::string> last_label_;
  std::string_view cur_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

}  // namespace

DecodeResult decode_mermaid(std::string_view text, const DecodeOptions& options) {
  GraphBuilder graph("mermaid");
  std::vector<std::string> warnings = MermaidParser(text, graph).run();
  if (options.strict && !warnings.empty()) throw ParseError(warnings.front(), 1, 1, "'flowchart TD'");
  DecodeResult result = graph.finish(options.strict);
  result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
  return result;
}

}  // namespace pmrkit::detail
