#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cartoforge/error.hpp"
#include "cartoforge/style/color.hpp"

namespace cartoforge::style {

enum class Category { icon, label, line, fill, background };

std::string_view to_string(Category category) noexcept;
std::optional<Category> category_from_string(std::string_view text) noexcept;

/// The four categories a manifest enumerates, in z-independent canonical order.
inline constexpr Category kElementCategories[] = {Category::icon, Category::label, Category::line,
                                                  Category::fill};

/// Insertion-ordered association list with unique keys. Order drives layer
/// ordering downstream, so it is part of equality.
template <class T>
class NamedMap {
public:
    using Entry = std::pair<std::string, T>;

    /// Throws Error{SchemaViolation} on a duplicate name.
    void insert(std::string name, T value) {
        if (contains(name)) {
            throw Error(ErrorKind::SchemaViolation, "duplicate element name \"" + name + "\"");
        }
        entries_.emplace_back(std::move(name), std::move(value));
    }

    const T* find(std::string_view name) const noexcept {
        for (const auto& e : entries_) {
            if (e.first == name) return &e.second;
        }
        return nullptr;
    }
    T* find(std::string_view name) noexcept {
        for (auto& e : entries_) {
            if (e.first == name) return &e.second;
        }
        return nullptr;
    }
    bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.first);
        return out;
    }

    friend bool operator==(const NamedMap&, const NamedMap&) = default;

private:
    std::vector<Entry> entries_;
};

struct IconSpec {
    std::string explanation;
    std::string expectation;

    friend bool operator==(const IconSpec&, const IconSpec&) = default;
};

struct LabelStyle {
    std::string explanation;
    Color text_color;
    Color text_halo_color;

    friend bool operator==(const LabelStyle&, const LabelStyle&) = default;
};

struct LineStyle {
    std::string explanation;
    Opacity line_opacity;
    Color line_color;

    friend bool operator==(const LineStyle&, const LineStyle&) = default;
};

struct FillStyle {
    std::string explanation;
    Opacity fill_opacity;
    Color fill_color;
    Color fill_outline_color;

    friend bool operator==(const FillStyle&, const FillStyle&) = default;
};

struct BackgroundStyle {
    std::string explanation;
    Color background_color;

    friend bool operator==(const BackgroundStyle&, const BackgroundStyle&) = default;
};

struct StyleSheet {
    std::string reasoning;
    NamedMap<IconSpec> icons;
    NamedMap<LabelStyle> labels;
    NamedMap<LineStyle> lines;
    NamedMap<FillStyle> fills;
    BackgroundStyle background;

    std::vector<std::string> names(Category category) const;

    friend bool operator==(const StyleSheet&, const StyleSheet&) = default;
};

/// Inventory of named map elements per category. The background is implicit.
struct LayerManifest {
    std::vector<std::string> icon_elements;
    std::vector<std::string> label_elements;
    std::vector<std::string> line_elements;
    std::vector<std::string> fill_elements;
    bool has_background = true;

    const std::vector<std::string>& elements(Category category) const;
    std::vector<std::string>& elements(Category category);
    std::size_t element_count() const noexcept;

    /// Throws Error{SchemaViolation} on duplicates within a category or an
    /// empty manifest.
    void validate() const;

    friend bool operator==(const LayerManifest&, const LayerManifest&) = default;
};

// ---------------------------------------------------------------------------
// Review verdicts

enum class Decision { accept, revise };

std::string_view to_string(Decision decision) noexcept;

enum class VariableKind { color, opacity, text };

/// Variables a reviewer may change per category, hyphenated lowercase.
std::span<const std::string_view> variables_for(Category category) noexcept;
/// Kind of a legal variable name; nullopt when the name is not adjustable in
/// `category`.
std::optional<VariableKind> variable_kind(Category category, std::string_view variable) noexcept;

using VariableValue = std::variant<Color, Opacity, std::string>;

struct VariableChange {
    std::string variable;
    VariableValue value;

    friend bool operator==(const VariableChange&, const VariableChange&) = default;
};

struct ReviewSuggestion {
    std::string element;
    Category category = Category::background;
    std::vector<VariableChange> changes;
    std::string explanation;

    friend bool operator==(const ReviewSuggestion&, const ReviewSuggestion&) = default;
};

struct ReviewVerdict {
    Decision decision = Decision::accept;
    std::vector<ReviewSuggestion> suggestions;
    std::string commentary;

    static ReviewVerdict accept(std::string commentary = {}) {
        return ReviewVerdict{Decision::accept, {}, std::move(commentary)};
    }

    /// Throws Error{SchemaViolation} when Accept carries suggestions, Revise
    /// carries none, or a change names a variable illegal for its category
    /// (Error{IllegalVariableForCategory}).
    void validate() const;

    friend bool operator==(const ReviewVerdict&, const ReviewVerdict&) = default;
};

// ---------------------------------------------------------------------------
// Operations

struct ElementRef {
    Category category;
    std::string name;

    friend bool operator==(const ElementRef&, const ElementRef&) = default;
};

std::string to_string(const ElementRef& ref);

struct CompletenessReport {
    std::vector<ElementRef> missing;     ///< in the manifest, not styled
    std::vector<ElementRef> extraneous;  ///< styled, not in the manifest

    bool complete() const noexcept { return missing.empty() && extraneous.empty(); }
    std::string describe() const;
};

CompletenessReport validate_completeness(const StyleSheet& sheet, const LayerManifest& manifest);

/// Replaces exactly the variables named by the verdict's suggestions.
/// Throws Error{UnknownElement} or Error{IllegalVariableForCategory}.
StyleSheet apply_suggestions(const StyleSheet& sheet, const ReviewVerdict& verdict);

}  // namespace cartoforge::style
