#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cartoforge/compiler/compiler.hpp"
#include "cartoforge/llm/gateway.hpp"
#include "cartoforge/metrics/metrics.hpp"
#include "cartoforge/prompt/prompt_kit.hpp"
#include "cartoforge/render/dataset.hpp"
#include "cartoforge/render/renderer.hpp"
#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::orchestrator {

enum class AgentSource { mllm, scripted };
enum class ReviewerSource { mllm, human, scripted };
enum class IconSource { mllm, placeholder };
enum class IconRegenPolicy { on_expectation_change, every_iteration };
enum class ImplementerMode { deterministic, mllm };
enum class Termination { accept, cap, error };

std::string_view to_string(AgentSource v) noexcept;
std::string_view to_string(ReviewerSource v) noexcept;
std::string_view to_string(IconSource v) noexcept;
std::string_view to_string(IconRegenPolicy v) noexcept;
std::string_view to_string(ImplementerMode v) noexcept;
std::string_view to_string(Termination v) noexcept;

/// Canned behaviour for scripted agents.
struct ScriptedInputs {
    /// Appreciator reply text.
    std::optional<std::string> caption;
    /// The designer's first stylesheet; revisions apply reviewer suggestions.
    std::optional<style::StyleSheet> stylesheet;
    /// Reviewer verdicts, one per iteration.
    std::vector<style::ReviewVerdict> verdicts;
    /// Once `verdicts` runs out: repeat the last one instead of accepting.
    bool repeat_last = false;

    friend bool operator==(const ScriptedInputs&, const ScriptedInputs&) = default;
};

struct RunConfig {
    /// Generated from the clock when empty.
    std::string run_id;
    int max_iterations = 25;
    int bins_per_channel = 20;
    AgentSource appreciator = AgentSource::mllm;
    AgentSource designer = AgentSource::mllm;
    ReviewerSource reviewer_source = ReviewerSource::mllm;
    IconSource icon_source = IconSource::mllm;
    IconRegenPolicy icon_regen_policy = IconRegenPolicy::on_expectation_change;
    ImplementerMode implementer = ImplementerMode::deterministic;
    bool show_metrics_to_reviewer = false;
    render::Viewport viewport;
    std::string label_field = "name";
    metrics::LintOptions lint;
    int icon_size_px = 64;
    /// Keyed by role id ("appreciator", "style_designer", ...) or "default".
    std::map<std::string, llm::ProviderConfig> providers;
    /// Adapter command line; the built-in renderer is used when empty.
    std::string external_renderer;
    ScriptedInputs scripted;

    /// Throws Error{InvalidArgument}.
    void validate() const;
    /// Error{InvalidArgument} when neither the role nor "default" is configured.
    const llm::ProviderConfig& provider_for(std::string_view role_id) const;

    static RunConfig from_json(const nlohmann::ordered_json& doc);
    nlohmann::ordered_json to_json() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct IterationRecord {
    int index = 0;
    style::StyleSheet stylesheet;
    compiler::CompiledStyle compiled;
    /// element name -> sha256 of the icon PNG
    std::map<std::string, std::string> icons;
    /// sha256 of map.png
    std::string rendered_digest;
    std::string render_provenance;
    style::ReviewVerdict verdict;
    /// "mllm", "human" or "scripted"; empty while awaiting a human verdict.
    std::string reviewer;
    metrics::MetricsReport metrics;
    /// Designer conversation after this iteration's stylesheet was produced.
    std::vector<llm::ChatMessage> designer_transcript;
    /// Path relative to the iteration directory -> sha256.
    std::map<std::string, std::string> files;

    double similarity() const noexcept { return metrics.similarity; }
    const std::vector<metrics::LintWarning>& lint_warnings() const noexcept { return metrics.warnings; }

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunSession {
    std::string run_id;
    RunConfig config;
    /// PNG bytes of the inspiration image, as sent to every agent.
    util::Bytes inspiration;
    prompt::ImageCaption caption;
    style::LayerManifest manifest;
    std::string dataset_digest;
    std::vector<IterationRecord> iterations;
    /// Human mode: the rendered iteration waiting for a verdict.
    std::optional<IterationRecord> awaiting;
    std::optional<Termination> terminated_by;
    std::string error;
    std::map<std::string, std::string> template_hashes;
    /// Run-level file (relative to the run directory) -> sha256.
    std::map<std::string, std::string> files;

    bool terminated() const noexcept { return terminated_by.has_value(); }

    friend bool operator==(const RunSession&, const RunSession&) = default;
};

// ---------------------------------------------------------------------------
// Agents

class Appreciator {
public:
    virtual ~Appreciator() = default;
    virtual prompt::ImageCaption describe(const util::Bytes& inspiration) = 0;
};

class Designer {
public:
    virtual ~Designer() = default;
    virtual style::StyleSheet design(const util::Bytes& inspiration, const style::LayerManifest& manifest,
                                     const prompt::ImageCaption& caption) = 0;
    virtual style::StyleSheet revise(const style::StyleSheet& prior, const style::ReviewVerdict& verdict) = 0;
    /// Conversation to persist; empty for designers without memory.
    virtual std::vector<llm::ChatMessage> transcript() const { return {}; }
    virtual void restore(std::vector<llm::ChatMessage> transcript) { (void)transcript; }
};

class IconDesigner {
public:
    virtual ~IconDesigner() = default;
    /// Encoded image bytes.
    virtual util::Bytes draw(const std::string& element, const style::IconSpec& spec, int size_px) = 0;
};

class Implementer {
public:
    virtual ~Implementer() = default;
    /// `notes` collects non-fatal remarks (e.g. a fallback to the compiler).
    virtual compiler::CompiledStyle implement(const style::StyleSheet& sheet, const style::LayerManifest& manifest,
                                              const compiler::SourceConfig& src,
                                              std::vector<metrics::LintWarning>& notes) = 0;
};

class Reviewer {
public:
    virtual ~Reviewer() = default;
    virtual style::ReviewVerdict review(const util::Bytes& inspiration, const util::Bytes& map_png,
                                        const metrics::MetricsReport& metrics, int iteration) = 0;
    virtual std::string_view source() const noexcept = 0;
};

struct Agents {
    std::unique_ptr<Appreciator> appreciator;
    std::unique_ptr<Designer> designer;
    std::unique_ptr<IconDesigner> icon_designer;
    std::unique_ptr<Implementer> implementer;
    /// Null in human mode.
    std::unique_ptr<Reviewer> reviewer;
};

/// Builds the provider for a role from its config.
using ProviderFactory = std::function<std::shared_ptr<llm::Provider>(std::string_view role_id, const llm::ProviderConfig&)>;

/// Agents as `config` selects them. MLLM agents get providers from
/// `config.providers` through `factory` (llm::make_provider when empty);
/// roles with identical provider configs share one.
Agents make_agents(const RunConfig& config, const style::LayerManifest& manifest, const ProviderFactory& factory = {});

/// Deterministic stand-in icon: a disc in the first hex colour named in the
/// expectation (or one derived from its text), on a transparent square.
util::Bytes placeholder_icon(const style::IconSpec& spec, int size_px);

// ---------------------------------------------------------------------------
// Events

struct ApiEvent {
    /// "iteration-started", "iteration-completed", "awaiting-verdict" or "run-terminated"
    std::string kind;
    std::string run_id;
    int iteration = 0;
    std::string timestamp;
    /// Extra fields (similarity, decision, terminated_by).
    nlohmann::ordered_json data = nlohmann::ordered_json::object();

    nlohmann::ordered_json to_json() const;
};

// ---------------------------------------------------------------------------
// Runs

/// Advances one run. Every iteration is persisted before the next begins.
class Runner {
public:
    using EventSink = std::function<void(const ApiEvent&)>;

    /// Creates `runs_dir/<run_id>`, stores the inputs and captions the
    /// inspiration. Error{IoError} when the run already exists.
    static Runner start(const std::filesystem::path& runs_dir, const util::Bytes& inspiration,
                        const render::MapDataset& dataset, const style::LayerManifest& manifest, RunConfig config,
                        Agents agents);
    /// Reopens a persisted run; the designer conversation is restored.
    static Runner resume(const std::filesystem::path& runs_dir, const std::string& run_id, Agents agents);

    /// Appends exactly one iteration. Throws Error{SessionTerminated},
    /// Error{AwaitingHumanVerdict}; any other failure terminates the run with
    /// terminated_by = error and is rethrown.
    IterationRecord step();
    /// Steps until the run terminates.
    const RunSession& run();
    /// Human mode: hands the awaited iteration its verdict; the next step()
    /// consumes it. Error{SessionTerminated}, Error{InvalidArgument} when
    /// nothing is awaited, or the verdict's own validation errors.
    void submit_verdict(const style::ReviewVerdict& verdict);

    const RunSession& session() const noexcept { return session_; }
    const std::filesystem::path& dir() const noexcept { return dir_; }
    void on_event(EventSink sink) { sink_ = std::move(sink); }

private:
    Runner() = default;
    IterationRecord advance();
    IterationRecord finalize(style::ReviewVerdict verdict, std::string reviewer);
    void fail(const std::exception& e);
    void emit(std::string kind, int iteration, nlohmann::ordered_json data = nlohmann::ordered_json::object());
    void write_index();

    std::filesystem::path dir_;
    RunSession session_;
    render::MapDataset dataset_;
    Agents agents_;
    std::optional<style::ReviewVerdict> pending_;
    /// element name -> (expectation, bytes) of the icons in use
    std::map<std::string, std::pair<std::string, util::Bytes>> icon_cache_;
    EventSink sink_;
};

/// Runs the whole loop with agents built from `config`.
RunSession run_transfer(const std::filesystem::path& runs_dir, const util::Bytes& inspiration,
                        const render::MapDataset& dataset, const RunConfig& config);

// ---------------------------------------------------------------------------
// Session store

/// Writes `runs_dir/<run_id>/session.json` atomically from `session`.
void persist_session(const std::filesystem::path& runs_dir, const RunSession& session);
/// Verifies every indexed file digest. Throws Error{IoError} or
/// Error{CorruptSession}.
RunSession load_session(const std::filesystem::path& runs_dir, const std::string& run_id);
/// Ids of the runs under `runs_dir` that have a session.json, sorted.
std::vector<std::string> list_sessions(const std::filesystem::path& runs_dir);

nlohmann::ordered_json caption_to_json(const prompt::ImageCaption& caption);
prompt::ImageCaption caption_from_json(const nlohmann::json& doc);
nlohmann::ordered_json transcript_to_json(const std::vector<llm::ChatMessage>& transcript,
                                          const util::Bytes& inspiration);
std::vector<llm::ChatMessage> transcript_from_json(const nlohmann::json& doc, const util::Bytes& inspiration);

/// Name of the per-run event log (one JSON object per line).
inline constexpr const char* kEventLog = "events.ndjson";

}  // namespace cartoforge::orchestrator
