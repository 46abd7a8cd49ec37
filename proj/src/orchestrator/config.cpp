#include <algorithm>
#include <array>
#include <utility>

#include "cartoforge/error.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/style/json_io.hpp"

namespace cartoforge::orchestrator {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <class E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) noexcept {
    for (const auto& [v, n] : table)
        if (v == value) return n;
    return table[0].second;
}

template <class E, std::size_t N>
E parse_enum(const std::array<std::pair<E, std::string_view>, N>& table, const ordered_json& doc, const char* key, E fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_string()) throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be a string");
    const std::string text = doc[key].get<std::string>();
    for (const auto& [v, n] : table)
        if (n == text) return v;
    std::string allowed;
    for (const auto& [v, n] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
    throw Error(ErrorKind::InvalidArgument, std::string(key) + " \"" + text + "\" is not one of " + allowed);
}

constexpr std::array<std::pair<AgentSource, std::string_view>, 2> kAgentSources{
    {{AgentSource::mllm, "mllm"}, {AgentSource::scripted, "scripted"}}};
constexpr std::array<std::pair<ReviewerSource, std::string_view>, 3> kReviewerSources{
    {{ReviewerSource::mllm, "mllm"}, {ReviewerSource::human, "human"}, {ReviewerSource::scripted, "scripted"}}};
constexpr std::array<std::pair<IconSource, std::string_view>, 2> kIconSources{
    {{IconSource::mllm, "mllm"}, {IconSource::placeholder, "placeholder"}}};
constexpr std::array<std::pair<IconRegenPolicy, std::string_view>, 2> kRegenPolicies{
    {{IconRegenPolicy::on_expectation_change, "on-expectation-change"},
     {IconRegenPolicy::every_iteration, "every-iteration"}}};
constexpr std::array<std::pair<ImplementerMode, std::string_view>, 2> kImplementerModes{
    {{ImplementerMode::deterministic, "deterministic"}, {ImplementerMode::mllm, "mllm"}}};
constexpr std::array<std::pair<Termination, std::string_view>, 3> kTerminations{
    {{Termination::accept, "accept"}, {Termination::cap, "cap"}, {Termination::error, "error"}}};

const std::array<std::string_view, 17> kConfigKeys{
    "run_id",         "max_iterations", "bins_per_channel", "appreciator", "designer",
    "reviewer_source", "icon_source",   "icon_regen_policy", "implementer", "show_metrics_to_reviewer",
    "viewport",       "label_field",    "lint",             "icon_size_px", "providers",
    "external_renderer", "scripted"};

}  // namespace

std::string_view to_string(AgentSource v) noexcept { return name_of(kAgentSources, v); }
std::string_view to_string(ReviewerSource v) noexcept { return name_of(kReviewerSources, v); }
std::string_view to_string(IconSource v) noexcept { return name_of(kIconSources, v); }
std::string_view to_string(IconRegenPolicy v) noexcept { return name_of(kRegenPolicies, v); }
std::string_view to_string(ImplementerMode v) noexcept { return name_of(kImplementerModes, v); }
std::string_view to_string(Termination v) noexcept { return name_of(kTerminations, v); }

void RunConfig::validate() const {
    if (max_iterations < 1) throw Error(ErrorKind::InvalidArgument, "max_iterations must be at least 1");
    if (bins_per_channel < 2) throw Error(ErrorKind::InvalidArgument, "bins_per_channel must be at least 2");
    if (viewport.width_px < render::kMinViewportEdge || viewport.height_px < render::kMinViewportEdge) {
        throw Error(ErrorKind::InvalidArgument, "viewport edges must be at least " +
                                                    std::to_string(render::kMinViewportEdge) + " px");
    }
    if (icon_size_px < 1) throw Error(ErrorKind::InvalidArgument, "icon_size_px must be positive");
    if (lint.tau < 0) throw Error(ErrorKind::InvalidArgument, "lint tau must not be negative");
    if (!run_id.empty() && (run_id.find_first_of("/\\") != std::string::npos || run_id == "." || run_id == "..")) {
        throw Error(ErrorKind::InvalidArgument, "run_id \"" + run_id + "\" is not a plain directory name");
    }
    if (appreciator == AgentSource::scripted && !scripted.caption) {
        throw Error(ErrorKind::InvalidArgument, "scripted appreciator needs scripted.caption");
    }
    if (designer == AgentSource::scripted && !scripted.stylesheet) {
        throw Error(ErrorKind::InvalidArgument, "scripted designer needs scripted.stylesheet");
    }
    if (reviewer_source == ReviewerSource::scripted && scripted.repeat_last && scripted.verdicts.empty()) {
        throw Error(ErrorKind::InvalidArgument, "scripted.after = repeat-last needs at least one verdict");
    }
    for (const auto& v : scripted.verdicts) v.validate();
    const auto need = [&](bool uses, std::string_view role) {
        if (uses) provider_for(role);
    };
    need(appreciator == AgentSource::mllm, "appreciator");
    need(designer == AgentSource::mllm, "style_designer");
    need(icon_source == IconSource::mllm, "icon_designer");
    need(implementer == ImplementerMode::mllm, "file_implementer");
    need(reviewer_source == ReviewerSource::mllm, "reviewer");
    for (const auto& [role, p] : providers) p.validate();
}

const llm::ProviderConfig& RunConfig::provider_for(std::string_view role_id) const {
    if (auto it = providers.find(std::string(role_id)); it != providers.end()) return it->second;
    if (auto it = providers.find("default"); it != providers.end()) return it->second;
    throw Error(ErrorKind::InvalidArgument, "no provider configured for role " + std::string(role_id));
}

RunConfig RunConfig::from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::InvalidArgument, "run config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
            throw Error(ErrorKind::InvalidArgument, "unknown run config key \"" + key + "\"");
        }
    }
    RunConfig c;
    try {
        c.run_id = doc.value("run_id", c.run_id);
        c.max_iterations = doc.value("max_iterations", c.max_iterations);
        c.bins_per_channel = doc.value("bins_per_channel", c.bins_per_channel);
        c.appreciator = parse_enum(kAgentSources, doc, "appreciator", c.appreciator);
        c.designer = parse_enum(kAgentSources, doc, "designer", c.designer);
        c.reviewer_source = parse_enum(kReviewerSources, doc, "reviewer_source", c.reviewer_source);
        c.icon_source = parse_enum(kIconSources, doc, "icon_source", c.icon_source);
        c.icon_regen_policy = parse_enum(kRegenPolicies, doc, "icon_regen_policy", c.icon_regen_policy);
        c.implementer = parse_enum(kImplementerModes, doc, "implementer", c.implementer);
        c.show_metrics_to_reviewer = doc.value("show_metrics_to_reviewer", c.show_metrics_to_reviewer);
        if (doc.contains("viewport")) {
            c.viewport.width_px = doc["viewport"].value("width", c.viewport.width_px);
            c.viewport.height_px = doc["viewport"].value("height", c.viewport.height_px);
        }
        c.label_field = doc.value("label_field", c.label_field);
        if (doc.contains("lint")) {
            c.lint.tau = doc["lint"].value("tau", c.lint.tau);
            c.lint.min_contrast = doc["lint"].value("min_contrast", c.lint.min_contrast);
        }
        c.icon_size_px = doc.value("icon_size_px", c.icon_size_px);
        if (doc.contains("providers")) {
            for (const auto& [role, p] : doc["providers"].items()) c.providers[role] = llm::ProviderConfig::from_json(p);
        }
        c.external_renderer = doc.value("external_renderer", c.external_renderer);
        if (doc.contains("scripted")) {
            const ordered_json& s = doc["scripted"];
            if (s.contains("caption") && !s["caption"].is_null()) c.scripted.caption = s["caption"].get<std::string>();
            if (s.contains("stylesheet") && !s["stylesheet"].is_null()) {
                c.scripted.stylesheet = style::parse_stylesheet(s["stylesheet"].dump());
            }
            if (s.contains("verdicts")) {
                for (const auto& v : s["verdicts"]) {
                    c.scripted.verdicts.push_back(style::verdict_from_json(style::parse_json(v.dump())));
                }
            }
            const std::string after = s.value("after", "accept");
            if (after != "accept" && after != "repeat-last") {
                throw Error(ErrorKind::InvalidArgument, "scripted.after must be accept or repeat-last");
            }
            c.scripted.repeat_last = after == "repeat-last";
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("run config: ") + e.what());
    }
    c.validate();
    return c;
}

ordered_json RunConfig::to_json() const {
    ordered_json out;
    out["run_id"] = run_id;
    out["max_iterations"] = max_iterations;
    out["bins_per_channel"] = bins_per_channel;
    out["appreciator"] = std::string(to_string(appreciator));
    out["designer"] = std::string(to_string(designer));
    out["reviewer_source"] = std::string(to_string(reviewer_source));
    out["icon_source"] = std::string(to_string(icon_source));
    out["icon_regen_policy"] = std::string(to_string(icon_regen_policy));
    out["implementer"] = std::string(to_string(implementer));
    out["show_metrics_to_reviewer"] = show_metrics_to_reviewer;
    out["viewport"] = {{"width", viewport.width_px}, {"height", viewport.height_px}};
    out["label_field"] = label_field;
    out["lint"] = {{"tau", lint.tau}, {"min_contrast", lint.min_contrast}};
    out["icon_size_px"] = icon_size_px;
    out["providers"] = ordered_json::object();
    for (const auto& [role, p] : providers) out["providers"][role] = p.to_json();
    out["external_renderer"] = external_renderer;
    ordered_json s = ordered_json::object();
    s["caption"] = scripted.caption ? ordered_json(*scripted.caption) : ordered_json(nullptr);
    s["stylesheet"] = scripted.stylesheet ? style::stylesheet_to_json(*scripted.stylesheet) : ordered_json(nullptr);
    s["verdicts"] = ordered_json::array();
    for (const auto& v : scripted.verdicts) s["verdicts"].push_back(style::verdict_to_json(v));
    s["after"] = scripted.repeat_last ? "repeat-last" : "accept";
    out["scripted"] = std::move(s);
    return out;
}

}  // namespace cartoforge::orchestrator
