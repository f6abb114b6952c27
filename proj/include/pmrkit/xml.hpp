#pragma once

// Minimal namespace-agnostic XML tree built on expat, plus an indenting writer.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmrkit::xml {

struct Element {
  /// Qualified name as written, e.g. "bpmn:task".
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  /// Concatenated character data directly inside this element.
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;

  /// Name without its namespace prefix.
  std::string_view local_name() const;
  const std::string* attribute(std::string_view name) const;
  std::optional<std::string> optional_attribute(std::string_view name) const;
  /// First direct child with the given local name.
  const Element* child(std::string_view local) const;
};

/// Parses a complete document; throws ParseError with line/column on malformed input.
Element parse(std::string_view text);

std::string escape(std::string_view text, bool attribute = true);

/// Streaming writer producing two-space indented XML.
class Writer {
 public:
  explicit Writer(bool declaration = true);

  Writer& open(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes = {});
  /// Self-closing element.
  Writer& leaf(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes = {});
  /// Element with text content on a single line.
  Writer& text_element(std::string_view name, std::string_view text,
                       const std::vector<std::pair<std::string, std::string>>& attributes = {});
  Writer& close();
  /// Serializes a parsed element (used to re-emit preserved content).
  Writer& raw(const Element& element);

  std::string str() const;

 private:
  void indent();
  void start_tag(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes);

  std::string out_;
  std::vector<std::string> stack_;
};

}  // namespace pmrkit::xml
