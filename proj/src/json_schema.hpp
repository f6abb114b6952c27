#pragma once

// Validator for the JSON Schema keywords used by the shipped schemas.

#include <string>

#include <json.hpp>

namespace pmrkit::detail {

/// Supports type, enum, const, required, properties, additionalProperties, items, minItems,
/// maxItems, minLength, pattern, allOf, anyOf, oneOf, if/then/else and local "$ref".
/// Throws SchemaViolation naming the JSON pointer of the first offending value.
void validate_schema(const nlohmann::json& instance, const nlohmann::json& schema);

}  // namespace pmrkit::detail
