#include "cartoforge/prompt/prompt_kit.hpp"

#include <algorithm>

#include "cartoforge/error.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/digest.hpp"
#include "prompt_resources.hpp"

namespace cartoforge::prompt {

namespace {

std::string_view resource(std::string_view key) {
    for (const auto& r : detail::prompt_resources()) {
        if (r.key == key) return r.text;
    }
    throw Error(ErrorKind::IoError, "no prompt resource named " + std::string(key));
}

std::string_view turn_key(Turn turn) {
    switch (turn) {
        case Turn::appreciator_describe: return "turns/appreciator_describe";
        case Turn::designer_design: return "turns/designer_design";
        case Turn::designer_revise: return "turns/designer_revise";
        case Turn::designer_reminder: return "turns/designer_reminder";
        case Turn::implementer_convert: return "turns/implementer_convert";
        case Turn::reviewer_review: return "turns/reviewer_review";
    }
    return "";
}

std::string join_names(const std::vector<std::string>& names) {
    if (names.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += "; ";
        out += names[i];
    }
    return out;
}

using Values = std::map<std::string, std::string, std::less<>>;

/// Everything derivable from `ctx`; absent context fields simply leave their
/// placeholders unbound so rendering reports them.
Values bind(const PromptContext& ctx) {
    Values v;
    if (ctx.manifest) {
        v["icon_elements"] = join_names(ctx.manifest->icon_elements);
        v["label_elements"] = join_names(ctx.manifest->label_elements);
        v["line_elements"] = join_names(ctx.manifest->line_elements);
        v["fill_elements"] = join_names(ctx.manifest->fill_elements);
    }
    v["variables"] = ctx.variables_block.value_or(variables_block());
    if (ctx.prior_stylesheet) v["stylesheet"] = style::serialize_stylesheet(*ctx.prior_stylesheet);
    if (ctx.verdict) v["verdict"] = style::serialize_verdict(*ctx.verdict);
    if (ctx.caption) v["caption"] = ctx.caption->raw;
    if (ctx.icon) {
        v["element"] = ctx.icon->first;
        v["expectation"] = ctx.icon->second.expectation;
    }
    if (ctx.note) {
        v["problem"] = *ctx.note;
        v["metrics"] = "\n\n" + *ctx.note;
    } else {
        v["metrics"] = "";
    }
    v["label_field"] = ctx.label_field;
    v["source_id"] = ctx.source_id;
    return v;
}

}  // namespace

std::string_view to_string(RoleId role) noexcept {
    switch (role) {
        case RoleId::appreciator: return "appreciator";
        case RoleId::style_designer: return "style_designer";
        case RoleId::icon_designer: return "icon_designer";
        case RoleId::file_implementer: return "file_implementer";
        case RoleId::reviewer: return "reviewer";
    }
    return "";
}

std::optional<RoleId> role_from_string(std::string_view text) noexcept {
    for (RoleId r : {RoleId::appreciator, RoleId::style_designer, RoleId::icon_designer, RoleId::file_implementer,
                     RoleId::reviewer}) {
        if (to_string(r) == text) return r;
    }
    return std::nullopt;
}

std::vector<std::string_view> declared_placeholders(RoleId role) {
    switch (role) {
        case RoleId::appreciator: return {};
        case RoleId::style_designer:
        case RoleId::reviewer:
            return {"icon_elements", "label_elements", "line_elements", "fill_elements", "variables"};
        case RoleId::icon_designer: return {"element", "expectation"};
        case RoleId::file_implementer: return {"label_field", "source_id"};
    }
    return {};
}

RoleProfile RoleProfile::builtin(RoleId role) {
    return make(role, std::string(resource(to_string(role))));
}

RoleProfile RoleProfile::make(RoleId role, std::string system_prompt_template) {
    const auto declared = declared_placeholders(role);
    for (const auto& name : placeholders_of(system_prompt_template)) {
        if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
            throw Error(ErrorKind::InvalidArgument,
                        "placeholder {{" + name + "}} is not declared for role " + std::string(to_string(role)));
        }
    }
    return RoleProfile{role, std::move(system_prompt_template)};
}

std::string RoleProfile::template_hash() const {
    return util::sha256_hex(system_prompt_template);
}

std::string variables_block() {
    return "- For each icon element, you can describe the expected style in as much detail as possible, e.g., its "
           "content, color, theme, and design. The icon designer will design this icon according to your "
           "expectations;\n"
           "- For each label element, you can set the text color and the text halo color;\n"
           "- For each line element, you can set the line opacity and the line color;\n"
           "- For each fill element, you can set the fill opacity, the fill color, and the fill outline color;\n"
           "- For the background, you can set the background color.";
}

std::vector<std::string> placeholders_of(std::string_view tmpl) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
        const auto end = tmpl.find("}}", pos + 2);
        if (end == std::string_view::npos) break;
        std::string name(tmpl.substr(pos + 2, end - pos - 2));
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
        pos = end + 2;
    }
    return out;
}

std::string render_template(std::string_view tmpl, const Values& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (true) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto name = tmpl.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end()) {
            throw Error(ErrorKind::MissingPlaceholder, "no value for {{" + std::string(name) + "}}");
        }
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::string render_role_prompt(const RoleProfile& profile, const PromptContext& ctx) {
    return render_template(profile.system_prompt_template, bind(ctx));
}

std::string render_turn(Turn turn, const PromptContext& ctx) {
    return render_template(resource(turn_key(turn)), bind(ctx));
}

std::map<std::string, std::string> template_hashes() {
    std::map<std::string, std::string> out;
    for (const auto& r : detail::prompt_resources()) out[std::string(r.key)] = util::sha256_hex(r.text);
    return out;
}

}  // namespace cartoforge::prompt
