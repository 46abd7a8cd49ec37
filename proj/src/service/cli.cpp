#include "cartoforge/service/cli.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <ostream>
#include <set>

#include "cartoforge/error.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/service/server.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/fs.hpp"

namespace cartoforge::service {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Flags {
    bool json = false;

    std::string inspiration, data, manifest, config, replay, record, out, run_id;
    std::string caption, stylesheet, style, icons, external, image_a, image_b, mode = "joint", label_field = "name";
    std::string fixture, session, host = "127.0.0.1", runs;
    int bins = 20, width = 1024, height = 768, port = 8080;
    double tau = metrics::LintOptions{}.tau, min_contrast = metrics::LintOptions{}.min_contrast;
    double max_inspiration_mb = 20, max_data_mb = 100;
};

render::MapDataset read_dataset(const std::string& path) {
    if (fs::is_directory(path)) return render::load_dataset(path);
    try {
        return render::dataset_from_bundle(json::parse(util::read_text(path)));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedJson, path + ": " + e.what());
    }
}

orchestrator::RunConfig read_config(const Flags& f) {
    orchestrator::RunConfig c;
    if (!f.config.empty()) c = orchestrator::RunConfig::from_json(style::parse_json(util::read_text(f.config)));
    if (!f.replay.empty()) {
        llm::ProviderConfig p;
        p.kind = llm::ProviderKind::replay;
        p.fixture_path = f.replay;
        c.providers.clear();
        c.providers["default"] = p;
    }
    if (!f.record.empty()) {
        for (auto& [role, p] : c.providers) p.record_path = f.record;
    }
    if (!f.run_id.empty()) c.run_id = f.run_id;
    return c;
}

void emit(std::ostream& out, const Flags& f, const ordered_json& doc, const std::string& text) {
    if (f.json) {
        out << doc.dump(2) << "\n";
    } else {
        out << text;
    }
}

std::string run_summary_text(const orchestrator::RunSession& s) {
    std::ostringstream t;
    for (const auto& r : s.iterations) {
        t << "iteration " << r.index << "  similarity " << std::fixed << std::setprecision(4) << r.similarity() << "  "
          << style::to_string(r.verdict.decision) << "\n";
    }
    t << "run " << s.run_id << " terminated by "
      << (s.terminated_by ? std::string(orchestrator::to_string(*s.terminated_by)) : std::string("nothing")) << "\n";
    if (!s.error.empty()) t << "error: " << s.error << "\n";
    return t.str();
}

ordered_json run_summary(const orchestrator::RunSession& s, const fs::path& dir) {
    ordered_json j;
    j["run_id"] = s.run_id;
    j["dir"] = dir.string();
    j["terminated_by"] = s.terminated_by ? ordered_json(std::string(orchestrator::to_string(*s.terminated_by)))
                                         : ordered_json(nullptr);
    j["error"] = s.error;
    j["iterations"] = ordered_json::array();
    for (const auto& r : s.iterations) {
        j["iterations"].push_back({{"index", r.index},
                                   {"similarity", r.similarity()},
                                   {"decision", std::string(style::to_string(r.verdict.decision))}});
    }
    return j;
}

/// Runs the loop to completion; the session is returned even when the run
/// ended in an error.
orchestrator::RunSession drive(const fs::path& runs, const util::Bytes& inspiration, const render::MapDataset& data,
                               const style::LayerManifest& manifest, const orchestrator::RunConfig& config) {
    auto agents = orchestrator::make_agents(config, manifest);
    auto runner = orchestrator::Runner::start(runs, inspiration, data, manifest, config, std::move(agents));
    try {
        runner.run();
    } catch (const Error& e) {
        if (!runner.session().terminated()) throw;
    }
    return runner.session();
}

std::map<std::string, util::Bytes> tree(const fs::path& root) {
    std::map<std::string, util::Bytes> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = util::read_bytes(e.path());
    }
    return out;
}

int cmd_run(const Flags& f, std::ostream& out) {
    const auto manifest = style::parse_manifest(util::read_text(f.manifest));
    const auto config = read_config(f);
    const auto s = drive(f.out, util::read_bytes(f.inspiration), read_dataset(f.data), manifest, config);
    emit(out, f, run_summary(s, fs::path(f.out) / s.run_id), run_summary_text(s));
    return s.terminated_by == orchestrator::Termination::error ? kExitRuntime : kExitOk;
}

int cmd_caption(const Flags& f, std::ostream& out) {
    auto config = read_config(f);
    config.appreciator = orchestrator::AgentSource::mllm;
    auto agents = orchestrator::make_agents(config, {});
    const auto image = encode_png(decode_image(util::read_bytes(f.inspiration)));
    const auto caption = agents.appreciator->describe(image);
    emit(out, f, orchestrator::caption_to_json(caption), caption.raw + "\n");
    return kExitOk;
}

int cmd_design(const Flags& f, std::ostream& out) {
    auto config = read_config(f);
    config.designer = orchestrator::AgentSource::mllm;
    if (f.caption.empty()) config.appreciator = orchestrator::AgentSource::mllm;
    const auto manifest = style::parse_manifest(util::read_text(f.manifest));
    auto agents = orchestrator::make_agents(config, manifest);
    const auto image = encode_png(decode_image(util::read_bytes(f.inspiration)));
    const auto caption = f.caption.empty()
                             ? agents.appreciator->describe(image)
                             : orchestrator::caption_from_json(json::parse(util::read_text(f.caption)));
    const auto sheet = agents.designer->design(image, manifest, caption);
    const auto text = style::serialize_stylesheet(sheet);
    if (!f.out.empty()) util::write_atomic(f.out, text);
    out << text;
    return kExitOk;
}

int cmd_compile(const Flags& f, std::ostream& out) {
    const auto sheet = style::parse_stylesheet(util::read_text(f.stylesheet));
    const auto manifest = style::parse_manifest(util::read_text(f.manifest));
    compiler::CompileOptions options;
    options.label_field = f.label_field;
    const auto compiled = compiler::compile(sheet, manifest, compiler::SourceConfig::for_manifest(manifest), options);
    const auto text = compiled.serialize();
    if (f.out.empty()) {
        out << text;
        return kExitOk;
    }
    util::write_atomic(f.out, text);
    ordered_json j;
    j["out"] = f.out;
    j["layers"] = compiled.document["layers"].size();
    j["sha256"] = util::sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    emit(out, f, j, "wrote " + f.out + " (" + std::to_string(compiled.document["layers"].size()) + " layers)\n");
    return kExitOk;
}

int cmd_validate(const Flags& f, std::ostream& out) {
    json doc;
    try {
        doc = json::parse(util::read_text(f.style));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedJson, f.style + ": " + e.what());
    }
    const auto diagnostics = compiler::validate_style(doc);
    ordered_json j;
    j["valid"] = diagnostics.empty();
    j["diagnostics"] = ordered_json::array();
    std::string text = diagnostics.empty() ? "valid\n" : "";
    for (const auto& d : diagnostics) {
        j["diagnostics"].push_back(compiler::to_json(d));
        text += d.kind + " " + d.path + ": " + d.message + "\n";
    }
    emit(out, f, j, text);
    return diagnostics.empty() ? kExitOk : kExitRuntime;
}

int cmd_render(const Flags& f, std::ostream& out) {
    const auto sheet = style::parse_stylesheet(util::read_text(f.stylesheet));
    const auto dataset = read_dataset(f.data);
    const render::Viewport vp{f.width, f.height};
    std::map<std::string, Image> icons;
    std::vector<std::pair<std::string, util::Bytes>> icon_bytes;
    for (const auto& [name, spec] : sheet.icons) {
        const fs::path file = fs::path(f.icons) / (compiler::slug(name) + ".png");
        const auto bytes = !f.icons.empty() && fs::is_regular_file(file) ? util::read_bytes(file)
                                                                          : orchestrator::placeholder_icon(spec, 64);
        icons.emplace(name, decode_image(bytes));
        icon_bytes.emplace_back(name, bytes);
    }
    render::RenderedMap map;
    if (f.external.empty()) {
        map = render::render(dataset, sheet, icons, vp, {f.label_field});
    } else {
        compiler::CompileOptions options;
        options.label_field = f.label_field;
        const auto compiled =
            compiler::compile(sheet, dataset.manifest(), compiler::SourceConfig::for_manifest(dataset.manifest()), options);
        map = render::external_render(compiled, compiler::build_sprite(icon_bytes), dataset, vp,
                                      render::AdapterSpec::parse(f.external));
    }
    const auto png = encode_png(map.pixels);
    util::write_atomic(f.out, png);
    ordered_json j;
    j["out"] = f.out;
    j["width"] = map.pixels.width();
    j["height"] = map.pixels.height();
    j["sha256"] = util::sha256_hex(png);
    j["provenance"] = map.provenance;
    emit(out, f, j, "wrote " + f.out + " (" + map.provenance + ")\n");
    return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
    const auto a = decode_image(util::read_bytes(f.image_a));
    const auto b = decode_image(util::read_bytes(f.image_b));
    const auto mode = f.mode == "marginal" ? metrics::HistogramMode::marginal : metrics::HistogramMode::joint;
    const auto report = metrics::evaluate(a, b, f.bins, mode);
    std::ostringstream t;
    t << std::setprecision(17) << "similarity " << report.similarity << "\n";
    auto j = metrics::to_json(report);
    j["mode"] = f.mode;
    emit(out, f, j, t.str());
    return kExitOk;
}

int cmd_lint(const Flags& f, std::ostream& out) {
    const auto sheet = style::parse_stylesheet(util::read_text(f.stylesheet));
    metrics::LintOptions options;
    options.tau = f.tau;
    options.min_contrast = f.min_contrast;
    const auto warnings = metrics::distinctness_lint(sheet, options);
    ordered_json j;
    j["tau"] = f.tau;
    j["min_contrast"] = f.min_contrast;
    j["warnings"] = ordered_json::array();
    std::string text = warnings.empty() ? "no warnings\n" : "";
    for (const auto& w : warnings) {
        j["warnings"].push_back(metrics::to_json(w));
        text += w.kind + ": " + w.message + "\n";
    }
    emit(out, f, j, text);
    return kExitOk;
}

/// Re-runs a recorded session from its own inputs against a fixture and
/// compares the two run directories.
int cmd_replay(const Flags& f, std::ostream& out) {
    const fs::path src = f.session;
    const auto original = orchestrator::load_session(src.parent_path(), src.filename().string());
    auto config = original.config;
    llm::ProviderConfig p;
    p.kind = llm::ProviderKind::replay;
    p.fixture_path = f.fixture;
    config.providers.clear();
    config.providers["default"] = p;
    if (!f.run_id.empty()) config.run_id = f.run_id;
    const auto s = drive(f.out, original.inspiration, render::load_dataset(src / "data"), original.manifest, config);

    const std::set<std::string> skip{orchestrator::kEventLog, "config.json", "session.json"};
    const auto a = tree(src);
    const auto b = tree(fs::path(f.out) / s.run_id);
    std::set<std::string> names;
    for (const auto& [k, v] : a) names.insert(k);
    for (const auto& [k, v] : b) names.insert(k);
    std::vector<std::string> differing;
    for (const auto& n : names) {
        if (skip.contains(n)) continue;
        auto ia = a.find(n);
        auto ib = b.find(n);
        if (ia == a.end() || ib == b.end() || ia->second != ib->second) differing.push_back(n);
    }
    const auto index_of = [](const util::Bytes& bytes) {
        auto doc = json::parse(std::string(bytes.begin(), bytes.end()));
        doc["files"].erase("config.json");
        doc.erase("run_id");
        return doc;
    };
    if (index_of(a.at("session.json")) != index_of(b.at("session.json"))) differing.push_back("session.json");

    auto j = run_summary(s, fs::path(f.out) / s.run_id);
    j["identical"] = differing.empty();
    j["differing"] = differing;
    std::string text = run_summary_text(s) + (differing.empty() ? "replay identical\n" : "replay differs:\n");
    for (const auto& d : differing) text += "  " + d + "\n";
    emit(out, f, j, text);
    return differing.empty() ? kExitOk : kExitRuntime;
}

int cmd_serve(const Flags& f, std::ostream& err) {
    ServeOptions options;
    options.runs_dir = f.runs;
    options.host = f.host;
    options.port = f.port;
    options.max_inspiration_bytes = static_cast<std::size_t>(f.max_inspiration_mb * (1 << 20));
    options.max_data_bytes = static_cast<std::size_t>(f.max_data_mb * (1 << 20));
    ApiServer server(options);
    const int port = server.bind();
    err << "serving " << f.runs << " on http://" << f.host << ":" << port << "\n" << std::flush;
    server.listen();
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Flags f;
    CLI::App app{"Map style transfer from an inspiration image", "cartoforge"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("--json", f.json, "Machine-readable JSON on stdout");

    auto* run = app.add_subcommand("run", "Run the whole design loop");
    run->add_option("--inspiration", f.inspiration, "Inspiration image")->required()->check(CLI::ExistingFile);
    run->add_option("--data", f.data, "Dataset directory or bundle JSON")->required()->check(CLI::ExistingPath);
    run->add_option("--manifest", f.manifest, "Layer manifest JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--config", f.config, "Run config JSON")->check(CLI::ExistingFile);
    run->add_option("--replay", f.replay, "Answer every model call from this fixture")->check(CLI::ExistingFile);
    run->add_option("--record", f.record, "Append every model call to this fixture");
    run->add_option("--run-id", f.run_id, "Run id (default: generated)");
    run->add_option("--out", f.out, "Runs directory")->required();

    auto* caption = app.add_subcommand("caption", "Describe an inspiration image");
    caption->add_option("--inspiration", f.inspiration, "Inspiration image")->required()->check(CLI::ExistingFile);
    caption->add_option("--config", f.config, "Run config JSON (providers)")->check(CLI::ExistingFile);
    caption->add_option("--replay", f.replay, "Fixture to answer from")->check(CLI::ExistingFile);
    caption->add_option("--record", f.record, "Fixture to record to");

    auto* design = app.add_subcommand("design", "Design a stylesheet for an inspiration image");
    design->add_option("--inspiration", f.inspiration, "Inspiration image")->required()->check(CLI::ExistingFile);
    design->add_option("--manifest", f.manifest, "Layer manifest JSON")->required()->check(CLI::ExistingFile);
    design->add_option("--caption", f.caption, "Caption JSON from `caption --json`")->check(CLI::ExistingFile);
    design->add_option("--config", f.config, "Run config JSON (providers)")->check(CLI::ExistingFile);
    design->add_option("--replay", f.replay, "Fixture to answer from")->check(CLI::ExistingFile);
    design->add_option("--record", f.record, "Fixture to record to");
    design->add_option("--out", f.out, "Also write the stylesheet here");

    auto* compile = app.add_subcommand("compile", "Compile a stylesheet to a style document");
    compile->add_option("--stylesheet", f.stylesheet, "Stylesheet JSON")->required()->check(CLI::ExistingFile);
    compile->add_option("--manifest", f.manifest, "Layer manifest JSON")->required()->check(CLI::ExistingFile);
    compile->add_option("--label-field", f.label_field, "Feature property holding label text");
    compile->add_option("--out", f.out, "Output style.json (default: stdout)");

    auto* validate = app.add_subcommand("validate", "Check a style document");
    validate->add_option("--style", f.style, "style.json")->required()->check(CLI::ExistingFile);

    auto* render_cmd = app.add_subcommand("render", "Render a stylesheet over a dataset");
    render_cmd->add_option("--stylesheet", f.stylesheet, "Stylesheet JSON")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--data", f.data, "Dataset directory or bundle JSON")->required()->check(CLI::ExistingPath);
    render_cmd->add_option("--icons", f.icons, "Directory of <slug>.png icons (placeholders otherwise)");
    render_cmd->add_option("--width", f.width, "Width in pixels");
    render_cmd->add_option("--height", f.height, "Height in pixels");
    render_cmd->add_option("--label-field", f.label_field, "Feature property holding label text");
    render_cmd->add_option("--external", f.external, "External renderer command line");
    render_cmd->add_option("--out", f.out, "Output PNG")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Colour-histogram similarity of two images");
    evaluate->add_option("--image-a", f.image_a, "First image")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--image-b", f.image_b, "Second image")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--bins", f.bins, "Bins per HSV channel")->check(CLI::Range(2, 256));
    evaluate->add_option("--mode", f.mode, "joint or marginal")->check(CLI::IsMember({"joint", "marginal"}));

    auto* lint = app.add_subcommand("lint", "Colour distinctness warnings for a stylesheet");
    lint->add_option("--stylesheet", f.stylesheet, "Stylesheet JSON")->required()->check(CLI::ExistingFile);
    lint->add_option("--tau", f.tau, "Minimum colour distance")->check(CLI::NonNegativeNumber);
    lint->add_option("--min-contrast", f.min_contrast, "Minimum label/halo contrast ratio");

    auto* replay = app.add_subcommand("replay", "Re-run a recorded session from a fixture and compare");
    replay->add_option("--fixture", f.fixture, "Recorded model calls")->required()->check(CLI::ExistingFile);
    replay->add_option("--session", f.session, "Recorded run directory")->required()->check(CLI::ExistingDirectory);
    replay->add_option("--run-id", f.run_id, "Run id for the replay (default: the recorded one)");
    replay->add_option("--out", f.out, "Runs directory for the replay")->required();

    auto* serve = app.add_subcommand("serve", "Serve runs over HTTP");
    serve->add_option("--port", f.port, "Port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", f.host, "Bind address");
    serve->add_option("--runs", f.runs, "Runs directory")->required();
    serve->add_option("--max-inspiration-mb", f.max_inspiration_mb, "Upload cap for the inspiration image");
    serve->add_option("--max-data-mb", f.max_data_mb, "Upload cap for the dataset bundle");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(f, out);
        if (caption->parsed()) return cmd_caption(f, out);
        if (design->parsed()) return cmd_design(f, out);
        if (compile->parsed()) return cmd_compile(f, out);
        if (validate->parsed()) return cmd_validate(f, out);
        if (render_cmd->parsed()) return cmd_render(f, out);
        if (evaluate->parsed()) return cmd_evaluate(f, out);
        if (lint->parsed()) return cmd_lint(f, out);
        if (replay->parsed()) return cmd_replay(f, out);
        if (serve->parsed()) return cmd_serve(f, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        if (f.json) out << ordered_json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump(2) << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        if (f.json) out << ordered_json{{"error", "Internal"}, {"message", e.what()}}.dump(2) << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace cartoforge::service
