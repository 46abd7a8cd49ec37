#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "cartoforge/error.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/style/json_io.hpp"

namespace cartoforge::orchestrator {

using llm::ChatMessage;
using llm::ChatSession;
using prompt::PromptContext;
using prompt::RoleId;
using prompt::RoleProfile;

namespace {

std::string role_name(RoleId role) { return std::string(prompt::to_string(role)); }

std::vector<llm::ImageAttachment> png(const util::Bytes& bytes) { return {{bytes, "image/png"}}; }

class MllmAppreciator final : public Appreciator {
public:
    MllmAppreciator(std::shared_ptr<llm::Provider> provider, int max_edge)
        : provider_(std::move(provider)), max_edge_(max_edge) {}

    prompt::ImageCaption describe(const util::Bytes& inspiration) override {
        const PromptContext ctx;
        auto s = ChatSession::open(role_name(RoleId::appreciator),
                                   prompt::render_role_prompt(RoleProfile::builtin(RoleId::appreciator), ctx), provider_,
                                   max_edge_);
        const auto reply =
            llm::chat(s, ChatMessage::user(prompt::render_turn(prompt::Turn::appreciator_describe, ctx), png(inspiration)));
        return prompt::parse_appreciator_reply(reply.text);
    }

private:
    std::shared_ptr<llm::Provider> provider_;
    int max_edge_;
};

class ScriptedAppreciator final : public Appreciator {
public:
    explicit ScriptedAppreciator(std::string text) : text_(std::move(text)) {}
    prompt::ImageCaption describe(const util::Bytes&) override { return prompt::parse_appreciator_reply(text_); }

private:
    std::string text_;
};

class MllmDesigner final : public Designer {
public:
    MllmDesigner(std::shared_ptr<llm::Provider> provider, int max_edge, style::LayerManifest manifest)
        : provider_(std::move(provider)), max_edge_(max_edge), manifest_(std::move(manifest)) {}

    style::StyleSheet design(const util::Bytes& inspiration, const style::LayerManifest&,
                             const prompt::ImageCaption& caption) override {
        PromptContext ctx;
        ctx.caption = caption;
        return ask(ChatMessage::user(prompt::render_turn(prompt::Turn::designer_design, ctx), png(inspiration)));
    }

    style::StyleSheet revise(const style::StyleSheet& prior, const style::ReviewVerdict& verdict) override {
        PromptContext ctx;
        ctx.prior_stylesheet = prior;
        ctx.verdict = verdict;
        return ask(ChatMessage::user(prompt::render_turn(prompt::Turn::designer_revise, ctx)));
    }

    std::vector<ChatMessage> transcript() const override { return session_ ? session_->transcript : std::vector<ChatMessage>{}; }

    void restore(std::vector<ChatMessage> transcript) override {
        if (transcript.empty()) return;
        session().transcript = std::move(transcript);
    }

private:
    ChatSession& session() {
        if (!session_) {
            PromptContext ctx;
            ctx.manifest = manifest_;
            session_ = ChatSession::open(role_name(RoleId::style_designer),
                                         prompt::render_role_prompt(RoleProfile::builtin(RoleId::style_designer), ctx),
                                         provider_, max_edge_);
        }
        return *session_;
    }

    style::StyleSheet parse(const std::string& reply) const {
        const auto sheet = style::parse_stylesheet(prompt::extract_json_block(reply), {.tolerant = true});
        const auto report = style::validate_completeness(sheet, manifest_);
        if (!report.complete()) throw Error(ErrorKind::SchemaViolation, report.describe());
        return sheet;
    }

    style::StyleSheet ask(ChatMessage message) {
        auto reply = llm::chat(session(), std::move(message));
        for (int reminder = 0;; ++reminder) {
            try {
                return parse(reply.text);
            } catch (const Error& e) {
                const auto k = e.kind();
                if (k != ErrorKind::NoJsonFound && k != ErrorKind::MalformedJson && k != ErrorKind::SchemaViolation &&
                    k != ErrorKind::MissingBackground) {
                    throw;
                }
                if (reminder == 2) {
                    throw Error(ErrorKind::InvalidStylesheet, std::string("designer reply unusable after 2 reminders: ") + e.what());
                }
                PromptContext ctx;
                ctx.note = e.what();
                reply = llm::chat(session(), ChatMessage::user(prompt::render_turn(prompt::Turn::designer_reminder, ctx)));
            }
        }
    }

    std::shared_ptr<llm::Provider> provider_;
    int max_edge_;
    style::LayerManifest manifest_;
    std::optional<ChatSession> session_;
};

class ScriptedDesigner final : public Designer {
public:
    explicit ScriptedDesigner(style::StyleSheet first) : first_(std::move(first)) {}
    style::StyleSheet design(const util::Bytes&, const style::LayerManifest&, const prompt::ImageCaption&) override {
        return first_;
    }
    style::StyleSheet revise(const style::StyleSheet& prior, const style::ReviewVerdict& verdict) override {
        return style::apply_suggestions(prior, verdict);
    }

private:
    style::StyleSheet first_;
};

class MllmIconDesigner final : public IconDesigner {
public:
    explicit MllmIconDesigner(std::shared_ptr<llm::Provider> provider) : provider_(std::move(provider)) {}
    util::Bytes draw(const std::string& element, const style::IconSpec& spec, int size_px) override {
        PromptContext ctx;
        ctx.icon = std::make_pair(element, spec);
        const auto text = prompt::render_role_prompt(RoleProfile::builtin(RoleId::icon_designer), ctx);
        return llm::generate_image(*provider_, text, size_px);
    }

private:
    std::shared_ptr<llm::Provider> provider_;
};

class PlaceholderIconDesigner final : public IconDesigner {
public:
    util::Bytes draw(const std::string&, const style::IconSpec& spec, int size_px) override {
        return placeholder_icon(spec, size_px);
    }
};

class DeterministicImplementer final : public Implementer {
public:
    explicit DeterministicImplementer(std::string label_field) : label_field_(std::move(label_field)) {}
    compiler::CompiledStyle implement(const style::StyleSheet& sheet, const style::LayerManifest& manifest,
                                      const compiler::SourceConfig& src, std::vector<metrics::LintWarning>&) override {
        compiler::CompileOptions options;
        options.label_field = label_field_;
        return compiler::compile(sheet, manifest, src, options);
    }

private:
    std::string label_field_;
};

std::set<std::string> layer_ids(const nlohmann::ordered_json& doc) {
    std::set<std::string> ids;
    if (doc.contains("layers") && doc["layers"].is_array()) {
        for (const auto& l : doc["layers"])
            if (l.is_object() && l.contains("id") && l["id"].is_string()) ids.insert(l["id"].get<std::string>());
    }
    return ids;
}

/// Converts through the file-implementer role; output that fails the
/// structural or value checks is replaced by the compiler's.
class MllmImplementer final : public Implementer {
public:
    MllmImplementer(std::shared_ptr<llm::Provider> provider, int max_edge, std::string label_field)
        : provider_(std::move(provider)), max_edge_(max_edge), label_field_(std::move(label_field)) {}

    compiler::CompiledStyle implement(const style::StyleSheet& sheet, const style::LayerManifest& manifest,
                                      const compiler::SourceConfig& src, std::vector<metrics::LintWarning>& notes) override {
        compiler::CompileOptions options;
        options.label_field = label_field_;
        auto reference = compiler::compile(sheet, manifest, src, options);

        PromptContext ctx;
        ctx.label_field = label_field_;
        ctx.source_id = src.source_id;
        ctx.prior_stylesheet = sheet;
        auto s = ChatSession::open(role_name(RoleId::file_implementer),
                                   prompt::render_role_prompt(RoleProfile::builtin(RoleId::file_implementer), ctx),
                                   provider_, max_edge_);
        const auto reply = llm::chat(s, ChatMessage::user(prompt::render_turn(prompt::Turn::implementer_convert, ctx)));

        std::string problem;
        try {
            auto doc = style::parse_json(prompt::extract_json_block(reply.text));
            compiler::rebind_sources(doc, manifest, src);
            auto diags = compiler::validate_style(doc);
            if (diags.empty()) diags = compiler::check_fidelity(doc, sheet);
            if (!diags.empty()) {
                problem = diags.front().kind + " at " + diags.front().path + ": " + diags.front().message;
            } else if (layer_ids(doc) != layer_ids(reference.document)) {
                problem = "layer ids differ from the stylesheet's elements";
            } else {
                return compiler::CompiledStyle{std::move(doc), reference.layer_index};
            }
        } catch (const Error& e) {
            problem = e.what();
        }
        metrics::LintWarning note;
        note.kind = "implementer-fallback";
        note.message = "file implementer output rejected (" + problem + "); compiled deterministically";
        notes.push_back(std::move(note));
        return reference;
    }

private:
    std::shared_ptr<llm::Provider> provider_;
    int max_edge_;
    std::string label_field_;
};

std::string metrics_note(const metrics::MetricsReport& report) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", report.similarity);
    std::string out = "Colour-histogram similarity between the two images: " + std::string(buf) + " (" +
                      std::to_string(report.bins) + " bins per HSV channel).";
    for (const auto& w : report.warnings) out += "\nWarning: " + w.message;
    return out;
}

class MllmReviewer final : public Reviewer {
public:
    MllmReviewer(std::shared_ptr<llm::Provider> provider, int max_edge, style::LayerManifest manifest, bool show_metrics)
        : provider_(std::move(provider)), max_edge_(max_edge), manifest_(std::move(manifest)), show_metrics_(show_metrics) {}

    style::ReviewVerdict review(const util::Bytes& inspiration, const util::Bytes& map_png,
                                const metrics::MetricsReport& report, int) override {
        PromptContext ctx;
        if (show_metrics_) ctx.note = metrics_note(report);
        const auto text = prompt::render_turn(prompt::Turn::reviewer_review, ctx);
        for (int attempt = 0;; ++attempt) {
            ChatSession s = fresh();
            auto images = png(inspiration);
            images.push_back({map_png, "image/png"});
            const auto reply = llm::chat(s, ChatMessage::user(text, std::move(images)));
            try {
                return prompt::parse_reviewer_reply(reply.text);
            } catch (const Error& e) {
                if (attempt == 2 || (e.kind() != ErrorKind::NoJsonFound && e.kind() != ErrorKind::SchemaViolation &&
                                     e.kind() != ErrorKind::MalformedJson &&
                                     e.kind() != ErrorKind::IllegalVariableForCategory)) {
                    throw;
                }
            }
        }
    }

    std::string_view source() const noexcept override { return "mllm"; }

private:
    ChatSession fresh() {
        if (!last_) {
            PromptContext ctx;
            ctx.manifest = manifest_;
            last_ = ChatSession::open(role_name(RoleId::reviewer),
                                      prompt::render_role_prompt(RoleProfile::builtin(RoleId::reviewer), ctx), provider_,
                                      max_edge_);
        } else {
            last_ = llm::reset_session(*last_);
        }
        return *last_;
    }

    std::shared_ptr<llm::Provider> provider_;
    int max_edge_;
    style::LayerManifest manifest_;
    bool show_metrics_;
    std::optional<ChatSession> last_;
};

class ScriptedReviewer final : public Reviewer {
public:
    ScriptedReviewer(std::vector<style::ReviewVerdict> verdicts, bool repeat_last)
        : verdicts_(std::move(verdicts)), repeat_last_(repeat_last) {}

    style::ReviewVerdict review(const util::Bytes&, const util::Bytes&, const metrics::MetricsReport&,
                                int iteration) override {
        if (iteration < static_cast<int>(verdicts_.size())) return verdicts_[static_cast<std::size_t>(iteration)];
        if (repeat_last_ && !verdicts_.empty()) return verdicts_.back();
        return style::ReviewVerdict::accept("scripted reviewer has no further suggestions");
    }

    std::string_view source() const noexcept override { return "scripted"; }

private:
    std::vector<style::ReviewVerdict> verdicts_;
    bool repeat_last_;
};

}  // namespace

util::Bytes placeholder_icon(const style::IconSpec& spec, int size_px) {
    if (size_px < 1) throw Error(ErrorKind::InvalidArgument, "icon size must be positive");
    std::optional<style::Color> color;
    const auto& text = spec.expectation;
    for (std::size_t i = text.find('#'); i != std::string::npos && !color; i = text.find('#', i + 1)) {
        color = style::Color::try_parse(std::string_view(text).substr(i, 7));
    }
    if (!color) {
        const auto h = util::sha256_hex(text);
        color = style::Color::parse("#" + h.substr(0, 6));
    }
    const auto rgb = color->rgb();
    const Rgba fill{rgb[0], rgb[1], rgb[2], 255};
    const Rgba rim{static_cast<std::uint8_t>(fill.r / 2), static_cast<std::uint8_t>(fill.g / 2),
                   static_cast<std::uint8_t>(fill.b / 2), 255};
    Image img(size_px, size_px);
    const double c = size_px / 2.0;
    const double r = size_px * 0.42;
    const double rim_width = std::max(1.0, size_px / 16.0);
    for (int y = 0; y < size_px; ++y) {
        for (int x = 0; x < size_px; ++x) {
            const double d = std::hypot(x + 0.5 - c, y + 0.5 - c);
            if (d <= r - rim_width) {
                img.set(x, y, fill);
            } else if (d <= r) {
                img.set(x, y, rim);
            }
        }
    }
    return encode_png(img);
}

Agents make_agents(const RunConfig& config, const style::LayerManifest& manifest, const ProviderFactory& factory) {
    std::map<std::string, std::shared_ptr<llm::Provider>> shared;
    const auto provider = [&](RoleId role) {
        const auto id = prompt::to_string(role);
        const auto& pc = config.provider_for(id);
        auto& slot = shared[pc.to_json().dump()];
        if (!slot) slot = factory ? factory(id, pc) : llm::make_provider(pc);
        return std::make_pair(slot, pc.max_image_edge);
    };

    Agents a;
    if (config.appreciator == AgentSource::scripted) {
        a.appreciator = std::make_unique<ScriptedAppreciator>(config.scripted.caption.value_or(""));
    } else {
        auto [p, edge] = provider(RoleId::appreciator);
        a.appreciator = std::make_unique<MllmAppreciator>(p, edge);
    }
    if (config.designer == AgentSource::scripted) {
        if (!config.scripted.stylesheet) throw Error(ErrorKind::InvalidArgument, "scripted designer needs a stylesheet");
        a.designer = std::make_unique<ScriptedDesigner>(*config.scripted.stylesheet);
    } else {
        auto [p, edge] = provider(RoleId::style_designer);
        a.designer = std::make_unique<MllmDesigner>(p, edge, manifest);
    }
    if (config.icon_source == IconSource::placeholder) {
        a.icon_designer = std::make_unique<PlaceholderIconDesigner>();
    } else {
        a.icon_designer = std::make_unique<MllmIconDesigner>(provider(RoleId::icon_designer).first);
    }
    if (config.implementer == ImplementerMode::mllm) {
        auto [p, edge] = provider(RoleId::file_implementer);
        a.implementer = std::make_unique<MllmImplementer>(p, edge, config.label_field);
    } else {
        a.implementer = std::make_unique<DeterministicImplementer>(config.label_field);
    }
    switch (config.reviewer_source) {
        case ReviewerSource::mllm: {
            auto [p, edge] = provider(RoleId::reviewer);
            a.reviewer = std::make_unique<MllmReviewer>(p, edge, manifest, config.show_metrics_to_reviewer);
            break;
        }
        case ReviewerSource::scripted:
            a.reviewer = std::make_unique<ScriptedReviewer>(config.scripted.verdicts, config.scripted.repeat_last);
            break;
        case ReviewerSource::human: break;
    }
    return a;
}

}  // namespace cartoforge::orchestrator
