#include "pmrkit/xml.hpp"

#include <expat.h>

#include "pmrkit/errors.hpp"

namespace pmrkit::xml {

std::string_view Element::local_name() const {
  std::string_view n = name;
  auto colon = n.find(':');
  return colon == std::string_view::npos ? n : n.substr(colon + 1);
}

const std::string* Element::attribute(std::string_view attr) const {
  for (const auto& [k, v] : attributes)
    if (k == attr) return &v;
  return nullptr;
}

std::optional<std::string> Element::optional_attribute(std::string_view attr) const {
  if (const std::string* v = attribute(attr)) return *v;
  return std::nullopt;
}

const Element* Element::child(std::string_view local) const {
  for (const Element& c : children)
    if (c.local_name() == local) return &c;
  return nullptr;
}

namespace {

struct Builder {
  XML_Parser parser;
  Element root;
  std::vector<Element*> stack;
  bool has_root = false;

  static void on_start(void* data, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<Builder*>(data);
    Element e;
    e.name = name;
    e.line = XML_GetCurrentLineNumber(self->parser);
    e.column = XML_GetCurrentColumnNumber(self->parser) + 1;
    for (std::size_t i = 0; atts[i]; i += 2) e.attributes.emplace_back(atts[i], atts[i + 1]);
    if (self->stack.empty()) {
      self->root = std::move(e);
      self->has_root = true;
      self->stack.push_back(&self->root);
    } else {
      Element* parent = self->stack.back();
      parent->children.push_back(std::move(e));
      self->stack.push_back(&parent->children.back());
    }
  }

  static void on_end(void* data, const XML_Char*) { static_cast<Builder*>(data)->stack.pop_back(); }

  static void on_text(void* data, const XML_Char* s, int len) {
    auto* self = static_cast<Builder*>(data);
    if (!self->stack.empty()) self->stack.back()->text.append(s, static_cast<std::size_t>(len));
  }
};

}  // namespace

Element parse(std::string_view text) {
  Builder b;
  b.parser = XML_ParserCreate("UTF-8");
  if (!b.parser) throw Error("cannot allocate XML parser");
  XML_SetUserData(b.parser, &b);
  XML_SetElementHandler(b.parser, &Builder::on_start, &Builder::on_end);
  XML_SetCharacterDataHandler(b.parser, &Builder::on_text);
  // Children are appended into vectors that may reallocate; pointers into the stack are only
  // dereferenced for the innermost open element, which is always the last child appended.
  XML_Status status = XML_Parse(b.parser, text.data(), static_cast<int>(text.size()), XML_TRUE);
  if (status != XML_STATUS_OK) {
    std::string message = std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(b.parser));
    std::size_t line = XML_GetCurrentLineNumber(b.parser);
    std::size_t column = XML_GetCurrentColumnNumber(b.parser) + 1;
    XML_ParserFree(b.parser);
    throw ParseError(message, line, column);
  }
  XML_ParserFree(b.parser);
  if (!b.has_root) throw ParseError("empty XML document", 1, 1, "a root element");
  return std::move(b.root);
}

std::string escape(std::string_view text, bool attribute) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute)
          out += "&quot;";
        else
          out += c;
        break;
      case '\n':
        if (attribute)
          out += "&#10;";
        else
          out += c;
        break;
      case '\t':
        if (attribute)
          out += "&#9;";
        else
          out += c;
        break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
  return out;
}

Writer::Writer(bool declaration) {
  if (declaration) out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
}

void Writer::indent() { out_.append(stack_.size() * 2, ' '); }

void Writer::start_tag(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes) {
  indent();
  out_ += '<';
  out_ += name;
  for (const auto& [k, v] : attributes) {
    out_ += ' ';
    out_ += k;
    out_ += "=\"";
    out_ += escape(v);
    out_ += '"';
  }
}

Writer& Writer::open(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes) {
  start_tag(name, attributes);
  out_ += ">\n";
  stack_.emplace_back(name);
  return *this;
}

Writer& Writer::leaf(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes) {
  start_tag(name, attributes);
  out_ += " />\n";
  return *this;
}

Writer& Writer::text_element(std::string_view name, std::string_view text,
                             const std::vector<std::pair<std::string, std::string>>& attributes) {
  start_tag(name, attributes);
  out_ += '>';
  out_ += escape(text, false);
  out_ += "</";
  out_ += name;
  out_ += ">\n";
  return *this;
}

Writer& Writer::close() {
  std::string name = std::move(stack_.back());
  stack_.pop_back();
  indent();
  out_ += "</" + name + ">\n";
  return *this;
}

Writer& Writer::raw(const Element& e) {
  bool has_text = e.text.find_first_not_of(" \t\r\n") != std::string::npos;
  if (e.children.empty() && !has_text) return leaf(e.name, e.attributes);
  if (e.children.empty()) return text_element(e.name, e.text, e.attributes);
  open(e.name, e.attributes);
  for (const Element& c : e.children) raw(c);
  return close();
}

std::string Writer::str() const { return out_; }

}  // namespace pmrkit::xml
