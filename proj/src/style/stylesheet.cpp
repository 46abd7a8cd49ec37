#include "cartoforge/style/stylesheet.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace cartoforge::style {

std::string_view to_string(Category category) noexcept {
    switch (category) {
        case Category::icon: return "icon";
        case Category::label: return "label";
        case Category::line: return "line";
        case Category::fill: return "fill";
        case Category::background: return "background";
    }
    return "background";
}

std::optional<Category> category_from_string(std::string_view text) noexcept {
    for (Category c : {Category::icon, Category::label, Category::line, Category::fill, Category::background}) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

std::string_view to_string(Decision decision) noexcept {
    return decision == Decision::accept ? "Accept" : "Revise";
}

std::vector<std::string> StyleSheet::names(Category category) const {
    switch (category) {
        case Category::icon: return icons.names();
        case Category::label: return labels.names();
        case Category::line: return lines.names();
        case Category::fill: return fills.names();
        case Category::background: return {"background"};
    }
    return {};
}

const std::vector<std::string>& LayerManifest::elements(Category category) const {
    switch (category) {
        case Category::icon: return icon_elements;
        case Category::label: return label_elements;
        case Category::line: return line_elements;
        case Category::fill: return fill_elements;
        case Category::background: break;
    }
    throw Error(ErrorKind::InvalidArgument, "the manifest has no background element list");
}

std::vector<std::string>& LayerManifest::elements(Category category) {
    return const_cast<std::vector<std::string>&>(std::as_const(*this).elements(category));
}

std::size_t LayerManifest::element_count() const noexcept {
    return icon_elements.size() + label_elements.size() + line_elements.size() + fill_elements.size();
}

void LayerManifest::validate() const {
    for (Category c : kElementCategories) {
        std::set<std::string_view> seen;
        for (const auto& name : elements(c)) {
            if (name.empty()) {
                throw Error(ErrorKind::SchemaViolation, "empty element name in " + std::string(to_string(c)));
            }
            if (!seen.insert(name).second) {
                throw Error(ErrorKind::SchemaViolation,
                            "duplicate " + std::string(to_string(c)) + " element \"" + name + "\"");
            }
        }
    }
    if (element_count() == 0) {
        throw Error(ErrorKind::SchemaViolation, "manifest lists no elements");
    }
}

namespace {

constexpr std::array<std::string_view, 1> kIconVars{"expectation"};
constexpr std::array<std::string_view, 2> kLabelVars{"text-color", "text-halo-color"};
constexpr std::array<std::string_view, 2> kLineVars{"line-opacity", "line-color"};
constexpr std::array<std::string_view, 3> kFillVars{"fill-opacity", "fill-color", "fill-outline-color"};
constexpr std::array<std::string_view, 1> kBackgroundVars{"background-color"};

}  // namespace

std::span<const std::string_view> variables_for(Category category) noexcept {
    switch (category) {
        case Category::icon: return kIconVars;
        case Category::label: return kLabelVars;
        case Category::line: return kLineVars;
        case Category::fill: return kFillVars;
        case Category::background: return kBackgroundVars;
    }
    return {};
}

std::optional<VariableKind> variable_kind(Category category, std::string_view variable) noexcept {
    const auto vars = variables_for(category);
    if (std::find(vars.begin(), vars.end(), variable) == vars.end()) return std::nullopt;
    if (variable == "expectation") return VariableKind::text;
    if (variable.ends_with("-opacity")) return VariableKind::opacity;
    return VariableKind::color;
}

namespace {

bool value_matches(VariableKind kind, const VariableValue& value) {
    switch (kind) {
        case VariableKind::color: return std::holds_alternative<Color>(value);
        case VariableKind::opacity: return std::holds_alternative<Opacity>(value);
        case VariableKind::text: return std::holds_alternative<std::string>(value);
    }
    return false;
}

void check_change(const ReviewSuggestion& s, const VariableChange& change) {
    const auto kind = variable_kind(s.category, change.variable);
    if (!kind) {
        throw Error(ErrorKind::IllegalVariableForCategory,
                    "\"" + change.variable + "\" cannot be set on a " + std::string(to_string(s.category)) +
                        " element");
    }
    if (!value_matches(*kind, change.value)) {
        throw Error(ErrorKind::SchemaViolation, "value of \"" + change.variable + "\" has the wrong type");
    }
    if (*kind == VariableKind::text && std::get<std::string>(change.value).empty()) {
        throw Error(ErrorKind::SchemaViolation, "icon expectation must not be empty");
    }
}

}  // namespace

void ReviewVerdict::validate() const {
    if (decision == Decision::accept && !suggestions.empty()) {
        throw Error(ErrorKind::SchemaViolation, "an Accept verdict cannot carry suggestions");
    }
    if (decision == Decision::revise && suggestions.empty()) {
        throw Error(ErrorKind::SchemaViolation, "a Revise verdict needs at least one suggestion");
    }
    for (const auto& s : suggestions) {
        if (s.element.empty()) {
            throw Error(ErrorKind::SchemaViolation, "suggestion names no element");
        }
        if (s.changes.empty()) {
            throw Error(ErrorKind::SchemaViolation, "suggestion for \"" + s.element + "\" changes nothing");
        }
        for (const auto& change : s.changes) check_change(s, change);
    }
}

std::string to_string(const ElementRef& ref) {
    return std::string(to_string(ref.category)) + ":" + ref.name;
}

std::string CompletenessReport::describe() const {
    std::string out;
    auto list = [&out](std::string_view label, const std::vector<ElementRef>& refs) {
        if (refs.empty()) return;
        if (!out.empty()) out += "; ";
        out += label;
        out += "=[";
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (i) out += ", ";
            out += to_string(refs[i]);
        }
        out += "]";
    };
    list("missing", missing);
    list("extraneous", extraneous);
    return out.empty() ? "complete" : out;
}

CompletenessReport validate_completeness(const StyleSheet& sheet, const LayerManifest& manifest) {
    CompletenessReport report;
    for (Category c : kElementCategories) {
        const auto& wanted = manifest.elements(c);
        const auto styled = sheet.names(c);
        for (const auto& name : wanted) {
            if (std::find(styled.begin(), styled.end(), name) == styled.end()) {
                report.missing.push_back({c, name});
            }
        }
        for (const auto& name : styled) {
            if (std::find(wanted.begin(), wanted.end(), name) == wanted.end()) {
                report.extraneous.push_back({c, name});
            }
        }
    }
    return report;
}

namespace {

void apply_change(StyleSheet& sheet, const ReviewSuggestion& s, const VariableChange& change) {
    check_change(s, change);
    auto unknown = [&s]() {
        return Error(ErrorKind::UnknownElement, "no " + std::string(to_string(s.category)) + " element named \"" +
                                                    s.element + "\" in the stylesheet");
    };
    const std::string& var = change.variable;
    switch (s.category) {
        case Category::icon: {
            IconSpec* icon = sheet.icons.find(s.element);
            if (!icon) throw unknown();
            icon->expectation = std::get<std::string>(change.value);
            break;
        }
        case Category::label: {
            LabelStyle* label = sheet.labels.find(s.element);
            if (!label) throw unknown();
            (var == "text-color" ? label->text_color : label->text_halo_color) = std::get<Color>(change.value);
            break;
        }
        case Category::line: {
            LineStyle* line = sheet.lines.find(s.element);
            if (!line) throw unknown();
            if (var == "line-color") {
                line->line_color = std::get<Color>(change.value);
            } else {
                line->line_opacity = std::get<Opacity>(change.value);
            }
            break;
        }
        case Category::fill: {
            FillStyle* fill = sheet.fills.find(s.element);
            if (!fill) throw unknown();
            if (var == "fill-opacity") {
                fill->fill_opacity = std::get<Opacity>(change.value);
            } else if (var == "fill-color") {
                fill->fill_color = std::get<Color>(change.value);
            } else {
                fill->fill_outline_color = std::get<Color>(change.value);
            }
            break;
        }
        case Category::background:
            sheet.background.background_color = std::get<Color>(change.value);
            break;
    }
}

}  // namespace

StyleSheet apply_suggestions(const StyleSheet& sheet, const ReviewVerdict& verdict) {
    StyleSheet out = sheet;
    if (verdict.decision == Decision::accept) return out;
    for (const auto& s : verdict.suggestions) {
        for (const auto& change : s.changes) apply_change(out, s, change);
    }
    return out;
}

}  // namespace cartoforge::style
