#include "cartoforge/style/json_io.hpp"

#include <algorithm>
#include <cctype>

namespace cartoforge::style {

namespace {

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct Reader {
    const ParseOptions& options;
    std::vector<std::string>* warnings;

    void unknown_key(const std::string& where, const std::string& key) const {
        const std::string msg = "unknown key \"" + key + "\" in " + where;
        if (!options.tolerant) throw Error(ErrorKind::SchemaViolation, msg);
        if (warnings) warnings->push_back(msg);
    }

    static const ordered_json& require(const ordered_json& obj, const char* key, const std::string& where) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            throw Error(ErrorKind::SchemaViolation, where + " is missing \"" + key + "\"");
        }
        return *it;
    }

    static std::string text(const ordered_json& v, const std::string& where) {
        if (!v.is_string()) throw Error(ErrorKind::SchemaViolation, where + " must be a string");
        return v.get<std::string>();
    }

    static std::string optional_text(const ordered_json& obj, const char* key, const std::string& where) {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return {};
        return text(*it, where + "." + key);
    }

    static Color color(const ordered_json& obj, const char* key, const std::string& where) {
        const auto& v = require(obj, key, where);
        if (!v.is_string()) throw Error(ErrorKind::SchemaViolation, where + "." + key + " must be a string");
        return Color::parse(v.get<std::string>());
    }

    static Opacity opacity(const ordered_json& obj, const char* key, const std::string& where) {
        const auto& v = require(obj, key, where);
        if (!v.is_number()) throw Error(ErrorKind::SchemaViolation, where + "." + key + " must be a number");
        return Opacity::of(v.get<double>());
    }

    void check_keys(const ordered_json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) const {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
                unknown_key(where, it.key());
            }
        }
    }

    static const ordered_json& object(const ordered_json& v, const std::string& where) {
        if (!v.is_object()) throw Error(ErrorKind::SchemaViolation, where + " must be an object");
        return v;
    }

    template <class T, class Fn>
    void elements(const ordered_json& category, const std::string& where, NamedMap<T>& into, Fn&& read) const {
        object(category, where);
        for (auto it = category.begin(); it != category.end(); ++it) {
            const std::string path = where + "." + it.key();
            into.insert(it.key(), read(object(it.value(), path), path));
        }
    }
};

}  // namespace

std::string_view stylesheet_key(Category category) noexcept {
    switch (category) {
        case Category::icon: return "symbol (icon)";
        case Category::label: return "symbol (label)";
        case Category::line: return "line";
        case Category::fill: return "fill";
        case Category::background: return "background";
    }
    return "background";
}

ordered_json parse_json(std::string_view json_text) {
    try {
        return ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedJson, e.what());
    }
}

StyleSheet stylesheet_from_json(const ordered_json& doc, const ParseOptions& options,
                                std::vector<std::string>* warnings) {
    const Reader r{options, warnings};
    Reader::object(doc, "document");
    r.check_keys(doc, {"reasoning", "stylesheet"}, "document");

    StyleSheet sheet;
    sheet.reasoning = Reader::optional_text(doc, "reasoning", "document");
    const auto& body = Reader::object(Reader::require(doc, "stylesheet", "document"), "stylesheet");
    r.check_keys(body, {"symbol (icon)", "symbol (label)", "line", "fill", "background"}, "stylesheet");

    if (auto it = body.find("symbol (icon)"); it != body.end()) {
        r.elements(*it, "symbol (icon)", sheet.icons, [&r](const ordered_json& e, const std::string& path) {
            r.check_keys(e, {"explanation", "expectation"}, path);
            IconSpec icon{Reader::optional_text(e, "explanation", path),
                          Reader::text(Reader::require(e, "expectation", path), path + ".expectation")};
            if (icon.expectation.empty()) {
                throw Error(ErrorKind::SchemaViolation, path + ".expectation must not be empty");
            }
            return icon;
        });
    }
    if (auto it = body.find("symbol (label)"); it != body.end()) {
        r.elements(*it, "symbol (label)", sheet.labels, [&r](const ordered_json& e, const std::string& path) {
            r.check_keys(e, {"explanation", "text-color", "text-halo-color"}, path);
            return LabelStyle{Reader::optional_text(e, "explanation", path), Reader::color(e, "text-color", path),
                              Reader::color(e, "text-halo-color", path)};
        });
    }
    if (auto it = body.find("line"); it != body.end()) {
        r.elements(*it, "line", sheet.lines, [&r](const ordered_json& e, const std::string& path) {
            r.check_keys(e, {"explanation", "line-opacity", "line-color"}, path);
            return LineStyle{Reader::optional_text(e, "explanation", path), Reader::opacity(e, "line-opacity", path),
                             Reader::color(e, "line-color", path)};
        });
    }
    if (auto it = body.find("fill"); it != body.end()) {
        r.elements(*it, "fill", sheet.fills, [&r](const ordered_json& e, const std::string& path) {
            r.check_keys(e, {"explanation", "fill-opacity", "fill-color", "fill-outline-color"}, path);
            return FillStyle{Reader::optional_text(e, "explanation", path), Reader::opacity(e, "fill-opacity", path),
                             Reader::color(e, "fill-color", path), Reader::color(e, "fill-outline-color", path)};
        });
    }
    auto bg = body.find("background");
    if (bg == body.end()) {
        throw Error(ErrorKind::MissingBackground, "stylesheet has no \"background\" entry");
    }
    Reader::object(*bg, "background");
    r.check_keys(*bg, {"explanation", "background-color"}, "background");
    sheet.background = {Reader::optional_text(*bg, "explanation", "background"),
                        Reader::color(*bg, "background-color", "background")};
    return sheet;
}

StyleSheet parse_stylesheet(std::string_view json_text, const ParseOptions& options,
                            std::vector<std::string>* warnings) {
    return stylesheet_from_json(parse_json(json_text), options, warnings);
}

ordered_json stylesheet_to_json(const StyleSheet& sheet) {
    ordered_json icons = ordered_json::object();
    for (const auto& [name, icon] : sheet.icons) {
        icons[name] = {{"explanation", icon.explanation}, {"expectation", icon.expectation}};
    }
    ordered_json labels = ordered_json::object();
    for (const auto& [name, label] : sheet.labels) {
        labels[name] = {{"explanation", label.explanation},
                        {"text-color", label.text_color.hex()},
                        {"text-halo-color", label.text_halo_color.hex()}};
    }
    ordered_json lines = ordered_json::object();
    for (const auto& [name, line] : sheet.lines) {
        lines[name] = {{"explanation", line.explanation},
                       {"line-opacity", line.line_opacity.value()},
                       {"line-color", line.line_color.hex()}};
    }
    ordered_json fills = ordered_json::object();
    for (const auto& [name, fill] : sheet.fills) {
        fills[name] = {{"explanation", fill.explanation},
                       {"fill-opacity", fill.fill_opacity.value()},
                       {"fill-color", fill.fill_color.hex()},
                       {"fill-outline-color", fill.fill_outline_color.hex()}};
    }
    ordered_json body = ordered_json::object();
    body["symbol (icon)"] = std::move(icons);
    body["symbol (label)"] = std::move(labels);
    body["line"] = std::move(lines);
    body["fill"] = std::move(fills);
    body["background"] = {{"explanation", sheet.background.explanation},
                          {"background-color", sheet.background.background_color.hex()}};
    ordered_json doc = ordered_json::object();
    doc["reasoning"] = sheet.reasoning;
    doc["stylesheet"] = std::move(body);
    return doc;
}

std::string serialize_stylesheet(const StyleSheet& sheet) {
    return stylesheet_to_json(sheet).dump(2);
}

LayerManifest manifest_from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::SchemaViolation, "manifest must be an object");
    LayerManifest manifest;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const auto category = category_from_string(it.key());
        if (!category || *category == Category::background) {
            throw Error(ErrorKind::SchemaViolation, "unknown manifest key \"" + it.key() + "\"");
        }
        if (!it->is_array()) throw Error(ErrorKind::SchemaViolation, "manifest." + it.key() + " must be an array");
        auto& names = manifest.elements(*category);
        for (const auto& v : *it) {
            if (!v.is_string()) throw Error(ErrorKind::SchemaViolation, "manifest names must be strings");
            names.push_back(v.get<std::string>());
        }
    }
    manifest.validate();
    return manifest;
}

LayerManifest parse_manifest(std::string_view json_text) {
    return manifest_from_json(parse_json(json_text));
}

ordered_json manifest_to_json(const LayerManifest& manifest) {
    ordered_json doc = ordered_json::object();
    for (Category c : kElementCategories) doc[std::string(to_string(c))] = manifest.elements(c);
    return doc;
}

namespace {

Category suggestion_category(const std::string& text) {
    const std::string key = lower(text);
    if (auto c = category_from_string(key)) return *c;
    if (key == "symbol (icon)") return Category::icon;
    if (key == "symbol (label)") return Category::label;
    if (key == "polygon") return Category::fill;
    throw Error(ErrorKind::SchemaViolation, "unknown suggestion category \"" + text + "\"");
}

VariableValue change_value(Category category, const std::string& variable, const ordered_json& v) {
    const auto kind = variable_kind(category, variable);
    if (!kind) {
        throw Error(ErrorKind::IllegalVariableForCategory,
                    "\"" + variable + "\" cannot be set on a " + std::string(to_string(category)) + " element");
    }
    switch (*kind) {
        case VariableKind::color:
            if (!v.is_string()) throw Error(ErrorKind::SchemaViolation, variable + " must be a color string");
            return Color::parse(v.get<std::string>());
        case VariableKind::opacity:
            if (!v.is_number()) throw Error(ErrorKind::SchemaViolation, variable + " must be a number");
            return Opacity::of(v.get<double>());
        case VariableKind::text:
            if (!v.is_string()) throw Error(ErrorKind::SchemaViolation, variable + " must be a string");
            return v.get<std::string>();
    }
    throw Error(ErrorKind::SchemaViolation, "unreachable");
}

}  // namespace

ReviewVerdict verdict_from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::SchemaViolation, "verdict must be an object");
    auto decision_it = doc.find("decision");
    if (decision_it == doc.end() || !decision_it->is_string()) {
        throw Error(ErrorKind::SchemaViolation, "verdict is missing the string field \"decision\"");
    }
    ReviewVerdict verdict;
    const auto decision = decision_it->get<std::string>();
    if (decision == "Accept") {
        verdict.decision = Decision::accept;
    } else if (decision == "Revise") {
        verdict.decision = Decision::revise;
    } else {
        throw Error(ErrorKind::SchemaViolation, "decision must be \"Accept\" or \"Revise\", got \"" + decision + "\"");
    }
    if (auto c = doc.find("commentary"); c != doc.end() && !c->is_null()) {
        if (!c->is_string()) throw Error(ErrorKind::SchemaViolation, "commentary must be a string");
        verdict.commentary = c->get<std::string>();
    }
    if (auto s = doc.find("suggestions"); s != doc.end() && !s->is_null()) {
        if (!s->is_array()) throw Error(ErrorKind::SchemaViolation, "suggestions must be an array");
        for (const auto& item : *s) {
            if (!item.is_object()) throw Error(ErrorKind::SchemaViolation, "suggestion must be an object");
            ReviewSuggestion suggestion;
            const auto& cat = Reader::require(item, "category", "suggestion");
            suggestion.category = suggestion_category(Reader::text(cat, "suggestion.category"));
            if (suggestion.category == Category::background) {
                suggestion.element = "background";
            } else {
                suggestion.element = Reader::text(Reader::require(item, "element", "suggestion"), "suggestion.element");
            }
            suggestion.explanation = Reader::optional_text(item, "explanation", "suggestion");
            const auto& changes = Reader::require(item, "changes", "suggestion");
            if (!changes.is_object()) throw Error(ErrorKind::SchemaViolation, "suggestion.changes must be an object");
            for (auto it = changes.begin(); it != changes.end(); ++it) {
                const std::string variable = lower(it.key());
                suggestion.changes.push_back({variable, change_value(suggestion.category, variable, it.value())});
            }
            verdict.suggestions.push_back(std::move(suggestion));
        }
    }
    verdict.validate();
    return verdict;
}

ordered_json verdict_to_json(const ReviewVerdict& verdict) {
    ordered_json suggestions = ordered_json::array();
    for (const auto& s : verdict.suggestions) {
        ordered_json changes = ordered_json::object();
        for (const auto& change : s.changes) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, Color>) {
                        changes[change.variable] = v.hex();
                    } else if constexpr (std::is_same_v<T, Opacity>) {
                        changes[change.variable] = v.value();
                    } else {
                        changes[change.variable] = v;
                    }
                },
                change.value);
        }
        ordered_json item = ordered_json::object();
        item["element"] = s.element;
        item["category"] = std::string(to_string(s.category));
        item["changes"] = std::move(changes);
        item["explanation"] = s.explanation;
        suggestions.push_back(std::move(item));
    }
    ordered_json doc = ordered_json::object();
    doc["decision"] = std::string(to_string(verdict.decision));
    doc["commentary"] = verdict.commentary;
    doc["suggestions"] = std::move(suggestions);
    return doc;
}

std::string serialize_verdict(const ReviewVerdict& verdict) {
    return verdict_to_json(verdict).dump(2);
}

}  // namespace cartoforge::style
