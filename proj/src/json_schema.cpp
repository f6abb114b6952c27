#include "json_schema.hpp"

#include <algorithm>
#include <regex>

#include "pmrkit/errors.hpp"

namespace pmrkit::detail {

namespace {

using nlohmann::json;

std::string escape_token(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + escape_token(key); }

bool has_type(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
  if (type == "number") return value.is_number();
  return false;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& value, const json& schema, const std::string& path) const {
    if (schema.is_boolean()) {
      if (!schema.get<bool>()) throw SchemaViolation(path, "no value is allowed here");
      return;
    }
    if (auto it = schema.find("$ref"); it != schema.end()) check(value, resolve(it->get<std::string>()), path);

    if (auto it = schema.find("type"); it != schema.end()) {
      bool ok = false;
      if (it->is_array()) {
        for (const json& t : *it) ok = ok || has_type(value, t.get<std::string>());
      } else {
        ok = has_type(value, it->get<std::string>());
      }
      if (!ok) throw SchemaViolation(path, "expected type " + it->dump());
    }
    if (auto it = schema.find("const"); it != schema.end() && value != *it)
      throw SchemaViolation(path, "expected the constant " + it->dump());
    if (auto it = schema.find("enum"); it != schema.end()) {
      if (std::find(it->begin(), it->end(), value) == it->end())
        throw SchemaViolation(path, "value must be one of " + it->dump());
    }

    if (value.is_object()) check_object(value, schema, path);
    if (value.is_array()) check_array(value, schema, path);
    if (value.is_string()) check_string(value.get<std::string>(), schema, path);

    if (auto it = schema.find("allOf"); it != schema.end())
      for (const json& s : *it) check(value, s, path);
    if (auto it = schema.find("anyOf"); it != schema.end()) {
      std::size_t ok = count_matching(value, *it, path);
      if (ok == 0) throw SchemaViolation(path, "value matches none of the alternatives");
    }
    if (auto it = schema.find("oneOf"); it != schema.end()) {
      std::size_t ok = count_matching(value, *it, path);
      if (ok != 1) throw SchemaViolation(path, "value must match exactly one alternative");
    }
    if (auto it = schema.find("if"); it != schema.end()) {
      if (matches(value, *it, path)) {
        if (auto t = schema.find("then"); t != schema.end()) check(value, *t, path);
      } else if (auto e = schema.find("else"); e != schema.end()) {
        check(value, *e, path);
      }
    }
  }

 private:
  bool matches(const json& value, const json& schema, const std::string& path) const {
    try {
      check(value, schema, path);
      return true;
    } catch (const SchemaViolation&) {
      return false;
    }
  }

  std::size_t count_matching(const json& value, const json& alternatives, const std::string& path) const {
    std::size_t n = 0;
    for (const json& s : alternatives) n += matches(value, s, path);
    return n;
  }

  void check_object(const json& value, const json& schema, const std::string& path) const {
    if (auto it = schema.find("required"); it != schema.end()) {
      for (const json& key : *it)
        if (!value.contains(key.get<std::string>()))
          throw SchemaViolation(child(path, key.get<std::string>()), "required property is missing");
    }
    const json* properties = nullptr;
    if (auto it = schema.find("properties"); it != schema.end()) properties = &*it;
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (properties && properties->contains(it.key())) {
        check(it.value(), properties->at(it.key()), child(path, it.key()));
        continue;
      }
      if (auto extra = schema.find("additionalProperties"); extra != schema.end()) {
        if (extra->is_boolean() && !extra->get<bool>())
          throw SchemaViolation(child(path, it.key()), "property is not allowed");
        check(it.value(), *extra, child(path, it.key()));
      }
    }
  }

  void check_array(const json& value, const json& schema, const std::string& path) const {
    if (auto it = schema.find("minItems"); it != schema.end() && value.size() < it->get<std::size_t>())
      throw SchemaViolation(path, "expected at least " + it->dump() + " items");
    if (auto it = schema.find("maxItems"); it != schema.end() && value.size() > it->get<std::size_t>())
      throw SchemaViolation(path, "expected at most " + it->dump() + " items");
    if (auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < value.size(); ++i) check(value[i], *it, path + "/" + std::to_string(i));
    }
  }

  void check_string(const std::string& value, const json& schema, const std::string& path) const {
    if (auto it = schema.find("minLength"); it != schema.end() && value.size() < it->get<std::size_t>())
      throw SchemaViolation(path, "string is too short");
    if (auto it = schema.find("pattern"); it != schema.end()) {
      if (!std::regex_search(value, std::regex(it->get<std::string>(), std::regex::ECMAScript)))
        throw SchemaViolation(path, "string does not match " + it->dump());
    }
  }

  const json& resolve(const std::string& ref) const {
    if (ref.empty() || ref[0] != '#') throw ConfigError("only local schema references are supported: " + ref);
    try {
      return root_.at(json::json_pointer(ref.substr(1)));
    } catch (const json::exception&) {
      throw ConfigError("unresolvable schema reference: " + ref);
    }
  }

  const json& root_;
};

}  // namespace

void validate_schema(const nlohmann::json& instance, const nlohmann::json& schema) {
  Validator(schema).check(instance, schema, "");
}

}  // namespace pmrkit::detail
