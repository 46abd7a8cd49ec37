#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::style {

using ordered_json = nlohmann::ordered_json;

/// JSON keys of the stylesheet document, one per category.
std::string_view stylesheet_key(Category category) noexcept;

struct ParseOptions {
    /// Downgrade unknown keys from errors to warnings.
    bool tolerant = false;
};

/// Parses the designer's stylesheet document:
/// `{"reasoning": ..., "stylesheet": {"symbol (icon)": {...}, "symbol (label)": {...},
///   "line": {...}, "fill": {...}, "background": {...}}}`.
/// Object key order is kept. Throws Error{MalformedJson}, Error{SchemaViolation}
/// or Error{MissingBackground}.
StyleSheet parse_stylesheet(std::string_view json_text, const ParseOptions& options = {},
                            std::vector<std::string>* warnings = nullptr);
StyleSheet stylesheet_from_json(const ordered_json& doc, const ParseOptions& options = {},
                                std::vector<std::string>* warnings = nullptr);

ordered_json stylesheet_to_json(const StyleSheet& sheet);
/// Two-space indented; all five category keys are always present.
std::string serialize_stylesheet(const StyleSheet& sheet);

/// `{"icon":[...],"label":[...],"line":[...],"fill":[...]}`
LayerManifest parse_manifest(std::string_view json_text);
LayerManifest manifest_from_json(const ordered_json& doc);
ordered_json manifest_to_json(const LayerManifest& manifest);

/// The reviewer output schema:
/// `{"decision": "Accept"|"Revise", "commentary": "...",
///   "suggestions": [{"element", "category", "changes": {variable: value}, "explanation"}]}`.
/// Variable names are matched case-insensitively and stored lowercase.
/// The result is validated (see ReviewVerdict::validate).
ReviewVerdict verdict_from_json(const ordered_json& doc);
ordered_json verdict_to_json(const ReviewVerdict& verdict);
std::string serialize_verdict(const ReviewVerdict& verdict);

/// Parses `json_text` into an ordered document; Error{MalformedJson} on failure.
ordered_json parse_json(std::string_view json_text);

}  // namespace cartoforge::style
