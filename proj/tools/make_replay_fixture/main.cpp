// Records the committed Sunflowers replay fixture: a scripted model behind a
// recording provider drives a three-iteration run.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "cartoforge/error.hpp"
#include "cartoforge/llm/gateway.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/render/dataset.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/testkit/scripted_model.hpp"
#include "cartoforge/testkit/synthetic.hpp"
#include "cartoforge/util/fs.hpp"

using namespace cartoforge;
namespace fs = std::filesystem;

namespace {

std::string fenced(const style::StyleSheet& sheet) {
    return "Here is the stylesheet.\n```json\n" + style::serialize_stylesheet(sheet) + "```\n";
}

/// Splits a verdict into its non-background and background suggestions.
std::pair<style::ReviewVerdict, style::ReviewVerdict> split(const style::ReviewVerdict& v) {
    style::ReviewVerdict rest = v;
    style::ReviewVerdict ground;
    ground.decision = style::Decision::revise;
    ground.commentary = "Ground is still too cool for the inspiration.";
    rest.suggestions.clear();
    for (const auto& s : v.suggestions) {
        (s.category == style::Category::background ? ground : rest).suggestions.push_back(s);
    }
    return {rest, ground};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Record the Sunflowers replay fixture"};
    fs::path fixtures = CARTOFORGE_FIXTURES_DIR;
    fs::path out;
    app.add_option("--fixtures", fixtures, "Fixture root holding the reference inputs")->check(CLI::ExistingDirectory);
    app.add_option("--out", out, "Fixture directory to (re)create")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        const auto text = [&](const char* rel) { return util::read_text(fixtures / rel); };
        const auto manifest = style::parse_manifest(text("manifests/neighborhood.json"));
        const auto sheet0 = style::parse_stylesheet(text("stylesheets/sunflowers_neighborhood.json"));
        const auto [first, second] =
            split(style::verdict_from_json(style::parse_json(text("reference/background_water_verdict.json"))));
        const auto sheet1 = style::apply_suggestions(sheet0, first);
        const auto sheet2 = style::apply_suggestions(sheet1, second);

        auto model = std::make_shared<testkit::ScriptedModel>();
        model->appreciator = {text("reference/sunflowers_caption.txt")};
        model->designer = {fenced(sheet0), fenced(sheet1), fenced(sheet2)};
        model->reviewer = {style::serialize_verdict(first), style::serialize_verdict(second),
                           R"({"decision":"Accept","commentary":"Palette now follows the inspiration."})"};

        fs::remove_all(out);
        fs::create_directories(out / "inputs");
        const auto inspiration = encode_png(testkit::swatch_collage({{style::Color::parse("#faf3d3"), 4},
                                                                     {style::Color::parse("#afcde7"), 2},
                                                                     {style::Color::parse("#91a76f"), 2},
                                                                     {style::Color::parse("#b74e3e"), 1}},
                                                                    96, 64));
        const auto dataset = testkit::synthetic_dataset(manifest);
        util::write_atomic(out / "inputs" / "inspiration.png", inspiration);
        util::write_atomic(out / "inputs" / "manifest.json", text("manifests/neighborhood.json"));
        render::save_dataset(dataset, out / "inputs" / "data");

        orchestrator::RunConfig cfg;
        cfg.run_id = "sunflowers";
        cfg.max_iterations = 5;
        cfg.viewport = {160, 120};
        llm::ProviderConfig p;
        p.kind = llm::ProviderKind::replay;
        p.fixture_path = "calls.jsonl";
        cfg.providers["default"] = p;
        util::write_atomic(out / "inputs" / "config.json", cfg.to_json().dump(2) + "\n");

        auto recorder = std::make_shared<llm::RecordingProvider>(testkit::scripted_provider(model), out / "calls.jsonl");
        const orchestrator::ProviderFactory factory = [recorder](std::string_view, const llm::ProviderConfig&) {
            return recorder;
        };
        auto runner = orchestrator::Runner::start(out / "expected", inspiration, dataset, manifest, cfg,
                                                  orchestrator::make_agents(cfg, manifest, factory));
        const auto& s = runner.run();
        std::cout << "recorded " << s.iterations.size() << " iterations into " << out.string() << "\n";
        for (const auto& it : s.iterations) std::cout << "  " << it.index << " similarity " << it.similarity() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
