#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::prompt {

enum class RoleId { appreciator, style_designer, icon_designer, file_implementer, reviewer };

std::string_view to_string(RoleId role) noexcept;
std::optional<RoleId> role_from_string(std::string_view text) noexcept;

/// Placeholders a role's system prompt may reference.
std::vector<std::string_view> declared_placeholders(RoleId role);

/// Image caption produced by the appreciator, split into its three sections.
struct ImageCaption {
    std::string content;
    std::string color;
    std::string theme_design;
    std::string raw;
    std::vector<style::Color> color_swatches;
    /// Set when one or more sections could not be located.
    bool sectioning_incomplete = false;

    friend bool operator==(const ImageCaption&, const ImageCaption&) = default;
};

struct RoleProfile {
    RoleId role_id;
    std::string system_prompt_template;

    /// The template shipped in resources/prompts/<role>.txt.
    static RoleProfile builtin(RoleId role);
    /// Throws Error{InvalidArgument} if the template references a placeholder
    /// the role does not declare.
    static RoleProfile make(RoleId role, std::string system_prompt_template);

    std::string template_hash() const;
};

/// Everything a prompt may be filled from. Only the fields a role's
/// placeholders need must be present.
struct PromptContext {
    std::optional<style::LayerManifest> manifest;
    /// Rendering of the adjustable variables; defaults to variables_block().
    std::optional<std::string> variables_block;
    std::optional<style::StyleSheet> prior_stylesheet;
    std::optional<style::ReviewVerdict> verdict;
    std::optional<ImageCaption> caption;
    /// Icon element name and its spec, for the icon designer.
    std::optional<std::pair<std::string, style::IconSpec>> icon;
    /// Free-form note: a parse problem for reminders, metrics for reviewers.
    std::optional<std::string> note;
    std::string label_field = "name";
    std::string source_id = "map-data";
};

/// The adjustable-variable list shown to designers and reviewers.
std::string variables_block();

/// Fills a role's system prompt. Manifest lists are joined with "; " ("none"
/// for an empty category). Throws Error{MissingPlaceholder}.
std::string render_role_prompt(const RoleProfile& profile, const PromptContext& ctx);

/// Per-turn user messages.
enum class Turn {
    appreciator_describe,
    designer_design,
    designer_revise,
    designer_reminder,
    implementer_convert,
    reviewer_review,
};

std::string render_turn(Turn turn, const PromptContext& ctx);

/// `{{name}}` substitution. Throws Error{MissingPlaceholder} for any name not
/// in `values`.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values);
std::vector<std::string> placeholders_of(std::string_view tmpl);

/// SHA-256 of every shipped template, keyed by resource name
/// (e.g. "reviewer", "turns/designer_revise").
std::map<std::string, std::string> template_hashes();

// ---------------------------------------------------------------------------
// Reply parsing

/// Returns the first balanced top-level JSON object in `reply`, preferring
/// the contents of a ``` fence. Throws Error{NoJsonFound}.
std::string extract_json_block(std::string_view reply);

/// Throws Error{EmptyReply}.
ImageCaption parse_appreciator_reply(std::string_view reply);

/// Reads the mandated reviewer JSON document out of the reply.
/// Throws Error{NoJsonFound} or Error{SchemaViolation}.
style::ReviewVerdict parse_reviewer_reply(std::string_view reply);

}  // namespace cartoforge::prompt
