#include <doctest.h>

#include <fstream>
#include <set>
#include <sys/stat.h>

#include "../support/test_support.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/testkit/scripted_model.hpp"
#include "cartoforge/testkit/synthetic.hpp"

using namespace cartoforge;
using namespace cartoforge::orchestrator;
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

util::Bytes inspiration() {
    return encode_png(testkit::swatch_collage({{style::Color::parse("#faf3d3"), 3},
                                               {style::Color::parse("#afcde7"), 1},
                                               {style::Color::parse("#91a76f"), 1}},
                                              60, 40));
}

style::ReviewVerdict palette_revision() { return style::verdict_from_json(style::parse_json(testing::fixture_text("reference/background_water_verdict.json"))); }

style::ReviewVerdict background_to(const std::string& hex) {
    style::ReviewVerdict v;
    v.decision = style::Decision::revise;
    v.suggestions.push_back({"Background", style::Category::background, {{"background-color", style::Color::parse(hex)}}, ""});
    return v;
}

RunConfig scripted_config(const std::string& id) {
    RunConfig c;
    c.run_id = id;
    c.appreciator = AgentSource::scripted;
    c.designer = AgentSource::scripted;
    c.reviewer_source = ReviewerSource::scripted;
    c.icon_source = IconSource::placeholder;
    c.viewport = {160, 120};
    c.scripted.caption = testing::fixture_text("reference/sunflowers_caption.txt");
    c.scripted.stylesheet = testing::sunflowers_sheet();
    return c;
}

/// All roles through one MLLM provider; the factory supplies it.
RunConfig mllm_config(const std::string& id) {
    RunConfig c;
    c.run_id = id;
    c.viewport = {160, 120};
    llm::ProviderConfig p;
    p.kind = llm::ProviderKind::replay;
    p.fixture_path = "unused.jsonl";
    c.providers["default"] = p;
    return c;
}

ProviderFactory serve(std::shared_ptr<llm::Provider> provider) {
    return [provider](std::string_view, const llm::ProviderConfig&) { return provider; };
}

Runner start(const fs::path& runs, const RunConfig& cfg, const ProviderFactory& factory = {}) {
    const auto manifest = testing::neighborhood_manifest();
    return Runner::start(runs, inspiration(), testkit::synthetic_dataset(manifest), manifest, cfg,
                         make_agents(cfg, manifest, factory));
}

std::string fenced(const style::StyleSheet& sheet) { return "Here you go.\n```json\n" + style::serialize_stylesheet(sheet) + "```\n"; }

std::map<std::string, util::Bytes> tree(const fs::path& root, const std::set<std::string>& skip = {}) {
    std::map<std::string, util::Bytes> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root).generic_string();
        if (!skip.contains(rel)) out[rel] = util::read_bytes(e.path());
    }
    return out;
}

std::vector<json> events(const fs::path& run_dir) {
    std::ifstream in(run_dir / kEventLog);
    std::vector<json> out;
    for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
    return out;
}

}  // namespace

TEST_SUITE("loop contract") {
    TEST_CASE("accept at iteration 0 gives one iteration") {
        util::TempDir runs;
        auto cfg = scripted_config("accept0");
        const auto s = start(runs.path(), cfg).run();
        CHECK(s.iterations.size() == 1);
        CHECK(s.terminated_by == Termination::accept);
        CHECK(s.iterations[0].index == 0);
        CHECK(s.iterations[0].reviewer == "scripted");
        CHECK(s.iterations[0].stylesheet == testing::sunflowers_sheet());

        const auto ev = events(runs.path() / "accept0");
        REQUIRE(ev.size() == 3);
        CHECK(ev[0]["event"] == "iteration-started");
        CHECK(ev[1]["event"] == "iteration-completed");
        CHECK(ev[2]["event"] == "run-terminated");
        CHECK(ev[2]["terminated_by"] == "accept");
        for (const auto& e : ev) {
            CHECK(e["run_id"] == "accept0");
            CHECK(e["iteration"] == 0);
            CHECK(e["timestamp"].get<std::string>().ends_with("Z"));
        }
    }

    TEST_CASE("never accepting stops at the cap") {
        util::TempDir runs;
        auto cfg = scripted_config("cap5");
        cfg.max_iterations = 5;
        cfg.scripted.verdicts = {background_to("#faf3d3")};
        cfg.scripted.repeat_last = true;
        auto runner = start(runs.path(), cfg);
        const auto& s = runner.run();
        CHECK(s.iterations.size() == 5);
        CHECK(s.terminated_by == Termination::cap);
        for (int i = 0; i < 5; ++i) CHECK(s.iterations[static_cast<std::size_t>(i)].index == i);
        CHECK_ERROR_KIND(runner.step(), ErrorKind::SessionTerminated);
        int last = -1;
        for (const auto& e : events(runner.dir())) {
            CHECK(e["iteration"].get<int>() >= last);
            last = e["iteration"].get<int>();
        }
    }

    TEST_CASE("scripted palette revision") {
        util::TempDir runs;
        auto cfg = scripted_config("revision");
        cfg.scripted.verdicts = {palette_revision()};
        const auto s = start(runs.path(), cfg).run();
        REQUIRE(s.iterations.size() == 2);
        const auto& before = s.iterations[0].stylesheet;
        const auto& after = s.iterations[1].stylesheet;
        CHECK(before.lines.find("Primary road")->line_color.hex() == "#8b0000");
        CHECK(after.background.background_color.hex() == "#faf3d3");
        CHECK(after.fills.find("Water")->fill_color.hex() == "#afcde7");
        CHECK(after.lines.find("Street")->line_opacity.value() == 0.8);
        CHECK(after == style::apply_suggestions(before, palette_revision()));
        CHECK(s.iterations[1].similarity() > s.iterations[0].similarity());
    }

    TEST_CASE("similarity and lint are recorded every iteration") {
        util::TempDir runs;
        auto cfg = scripted_config("lint");
        cfg.max_iterations = 2;
        cfg.scripted.verdicts = {background_to("#4682b4")};
        cfg.scripted.repeat_last = true;
        const auto s = start(runs.path(), cfg).run();
        REQUIRE(s.iterations.size() == 2);
        for (const auto& r : s.iterations) {
            CHECK(r.metrics.bins == 20);
            CHECK(r.similarity() >= 0.0);
            CHECK(r.similarity() <= 1.0);
        }
        bool flagged = false;
        for (const auto& w : s.iterations[1].lint_warnings()) {
            flagged |= w.kind == "distinctness" &&
                       std::find(w.elements.begin(), w.elements.end(), "background") != w.elements.end();
        }
        CHECK(flagged);
    }
}

TEST_SUITE("human reviewer") {
    TEST_CASE("step waits for a verdict and applies it") {
        util::TempDir runs;
        auto cfg = scripted_config("human");
        cfg.reviewer_source = ReviewerSource::human;
        auto runner = start(runs.path(), cfg);
        CHECK_ERROR_KIND(runner.submit_verdict(style::ReviewVerdict::accept()), ErrorKind::InvalidArgument);
        CHECK_ERROR_KIND(runner.step(), ErrorKind::AwaitingHumanVerdict);
        REQUIRE(runner.session().awaiting.has_value());
        CHECK(runner.session().awaiting->index == 0);
        CHECK(runner.session().iterations.empty());
        CHECK_ERROR_KIND(runner.step(), ErrorKind::AwaitingHumanVerdict);

        auto bad = background_to("#000000");
        bad.suggestions[0].element = "Moon";
        bad.suggestions[0].category = style::Category::fill;
        bad.suggestions[0].changes = {{"fill-color", style::Color::parse("#000000")}};
        CHECK_ERROR_KIND(runner.submit_verdict(bad), ErrorKind::UnknownElement);

        runner.submit_verdict(background_to("#000000"));
        const auto first = runner.step();
        CHECK(first.index == 0);
        CHECK(first.reviewer == "human");
        CHECK_ERROR_KIND(runner.step(), ErrorKind::AwaitingHumanVerdict);
        const auto& next = runner.session().awaiting->stylesheet;
        auto expected = first.stylesheet;
        expected.background.background_color = style::Color::parse("#000000");
        CHECK(next == expected);
        CHECK(next.background.explanation == first.stylesheet.background.explanation);

        runner.submit_verdict(style::ReviewVerdict::accept("good"));
        runner.step();
        CHECK(runner.session().terminated_by == Termination::accept);
        CHECK(runner.session().iterations.size() == 2);

        std::vector<std::string> kinds;
        for (const auto& e : events(runner.dir())) kinds.push_back(e["event"]);
        CHECK(kinds == std::vector<std::string>{"iteration-started", "awaiting-verdict", "iteration-completed",
                                                "iteration-started", "awaiting-verdict", "iteration-completed",
                                                "run-terminated"});
    }

    TEST_CASE("awaiting state survives a reload") {
        util::TempDir runs;
        auto cfg = scripted_config("human-resume");
        cfg.reviewer_source = ReviewerSource::human;
        {
            auto runner = start(runs.path(), cfg);
            CHECK_ERROR_KIND(runner.step(), ErrorKind::AwaitingHumanVerdict);
        }
        const auto loaded = load_session(runs.path(), "human-resume");
        REQUIRE(loaded.awaiting.has_value());
        CHECK(loaded.awaiting->files.count("review.json") == 0);
        auto runner = Runner::resume(runs.path(), "human-resume", make_agents(cfg, loaded.manifest));
        runner.submit_verdict(style::ReviewVerdict::accept());
        CHECK(runner.step().index == 0);
        CHECK(load_session(runs.path(), "human-resume").terminated_by == Termination::accept);
    }
}

TEST_SUITE("mllm roles") {
    TEST_CASE("reviewer is fresh, designer remembers") {
        util::TempDir runs;
        auto model = std::make_shared<testkit::ScriptedModel>();
        const auto sheet0 = testing::sunflowers_sheet();
        const auto sheet1 = style::apply_suggestions(sheet0, palette_revision());
        model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
        model->designer = {fenced(sheet0), fenced(sheet1)};
        model->reviewer = {testing::fixture_text("reference/background_water_verdict.json"), R"({"decision":"Accept","commentary":"Fine now."})"};
        const auto s = start(runs.path(), mllm_config("mllm"), serve(testkit::scripted_provider(model))).run();

        REQUIRE(s.iterations.size() == 2);
        CHECK(s.terminated_by == Termination::accept);
        CHECK(s.caption.color_swatches.size() == 7);
        CHECK(s.iterations[0].stylesheet.lines.find("Primary road")->line_color.hex() == "#8b0000");
        CHECK(s.iterations[1].stylesheet.background.background_color.hex() == "#faf3d3");
        CHECK(s.iterations[0].reviewer == "mllm");

        const auto reviews = model->requests("reviewer");
        REQUIRE(reviews.size() == 2);
        for (const auto& r : reviews) {
            REQUIRE(r.messages.size() == 2);
            CHECK(r.messages[0]["role"] == "system");
            CHECK(r.messages[1]["role"] == "user");
            CHECK(r.messages[1]["content"].size() == 3);
            CHECK(r.turn == 1);
        }
        const auto second = testkit::request_text(reviews[1]);
        CHECK(second.find("Palette too saturated") == std::string::npos);
        CHECK(second.find("#8b0000") == std::string::npos);
        CHECK(reviews[0].messages[1]["content"][2] != reviews[1].messages[1]["content"][2]);

        const auto designs = model->requests("style_designer");
        REQUIRE(designs.size() == 2);
        CHECK(designs[1].turn == 2);
        CHECK(designs[1].messages.size() == 4);
        CHECK(designs[1].messages[2]["role"] == "assistant");
        const auto text = testkit::request_text(designs[1]);
        CHECK(text.find("#8b0000") != std::string::npos);
        CHECK(text.find("#faf3d3") != std::string::npos);
        CHECK(text.find("Cross-check the caption") == std::string::npos);
        CHECK(s.iterations[1].designer_transcript.size() == 5);
    }

    TEST_CASE("designer reminders then a hard error") {
        util::TempDir runs;
        auto model = std::make_shared<testkit::ScriptedModel>();
        model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
        model->designer = {"I would pick warm colours.", "{\"reasoning\": \"x\"}", fenced(testing::sunflowers_sheet())};
        model->reviewer = {R"({"decision":"Accept"})"};
        const auto s = start(runs.path(), mllm_config("reminded"), serve(testkit::scripted_provider(model))).run();
        CHECK(s.terminated_by == Termination::accept);
        const auto designs = model->requests("style_designer");
        REQUIRE(designs.size() == 3);
        CHECK(testkit::request_text(designs[1]).find("could not be used") != std::string::npos);

        auto broken = std::make_shared<testkit::ScriptedModel>();
        broken->appreciator = model->appreciator;
        broken->designer = {"no stylesheet today"};
        broken->reviewer = model->reviewer;
        auto runner = start(runs.path(), mllm_config("broken"), serve(testkit::scripted_provider(broken)));
        CHECK_ERROR_KIND(runner.step(), ErrorKind::InvalidStylesheet);
        CHECK(broken->requests("style_designer").size() == 3);
        const auto loaded = load_session(runs.path(), "broken");
        CHECK(loaded.terminated_by == Termination::error);
        CHECK(loaded.error.find("InvalidStylesheet") != std::string::npos);
        CHECK(loaded.iterations.empty());
        CHECK(events(runner.dir()).back()["event"] == "run-terminated");
    }

    TEST_CASE("provider failure ends the run and is persisted") {
        util::TempDir runs;
        auto model = std::make_shared<testkit::ScriptedModel>();
        model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
        model->designer = {fenced(testing::sunflowers_sheet())};
        auto runner = start(runs.path(), mllm_config("nomodel"), serve(testkit::scripted_provider(model)));
        CHECK_ERROR_KIND(runner.run(), ErrorKind::ReplayMiss);
        CHECK(runner.session().terminated_by == Termination::error);
        CHECK(load_session(runs.path(), "nomodel") == runner.session());
    }

    TEST_CASE("metrics reach the reviewer only when enabled") {
        for (bool show : {false, true}) {
            util::TempDir runs;
            auto model = std::make_shared<testkit::ScriptedModel>();
            model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
            model->designer = {fenced(testing::sunflowers_sheet())};
            model->reviewer = {R"({"decision":"Accept"})"};
            auto cfg = mllm_config("m");
            cfg.show_metrics_to_reviewer = show;
            start(runs.path(), cfg, serve(testkit::scripted_provider(model))).run();
            const auto text = testkit::request_text(model->requests("reviewer").at(0));
            CHECK((text.find("similarity") != std::string::npos) == show);
        }
    }

    TEST_CASE("file implementer output is checked") {
        const auto sheet = testing::sunflowers_sheet();
        const auto manifest = testing::neighborhood_manifest();
        const auto good = compiler::compile(sheet, manifest, compiler::SourceConfig::for_manifest(manifest));
        auto tampered = good.document;
        tampered["layers"][1]["paint"]["fill-color"] = "#123456";
        for (const auto& [reply, fallback] : std::vector<std::pair<std::string, bool>>{
                 {"```json\n" + good.serialize() + "```", false},
                 {tampered.dump(), true},
                 {"cannot do that", true}}) {
            util::TempDir runs;
            auto model = std::make_shared<testkit::ScriptedModel>();
            model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
            model->designer = {fenced(sheet)};
            model->reviewer = {R"({"decision":"Accept"})"};
            model->implementer = {reply};
            auto cfg = mllm_config("impl");
            cfg.implementer = ImplementerMode::mllm;
            const auto s = start(runs.path(), cfg, serve(testkit::scripted_provider(model))).run();
            bool fell_back = false;
            for (const auto& w : s.iterations[0].lint_warnings()) fell_back |= w.kind == "implementer-fallback";
            CHECK(fell_back == fallback);
            CHECK(s.iterations[0].compiled.serialize() == good.serialize());
            CHECK(model->requests("file_implementer").size() == 1);
        }
    }

    TEST_CASE("icon regeneration policy") {
        for (auto policy : {IconRegenPolicy::on_expectation_change, IconRegenPolicy::every_iteration}) {
            util::TempDir runs;
            auto model = std::make_shared<testkit::ScriptedModel>();
            auto cfg = scripted_config("icons");
            cfg.icon_source = IconSource::mllm;
            cfg.providers["default"] = mllm_config("x").providers["default"];
            cfg.icon_regen_policy = policy;
            cfg.max_iterations = 3;
            auto tower = background_to("#faf3d3");
            tower.suggestions.push_back({"Metro station", style::Category::icon, {{"expectation", std::string("a blue M in a circle")}}, ""});
            cfg.scripted.verdicts = {background_to("#faf3d3"), tower};
            cfg.scripted.repeat_last = true;
            const auto s = start(runs.path(), cfg, serve(testkit::scripted_provider(model))).run();
            REQUIRE(s.iterations.size() == 3);
            if (policy == IconRegenPolicy::every_iteration) {
                CHECK(model->image_log.size() == 6);
            } else {
                CHECK(model->image_log.size() == 3);
                CHECK(s.iterations[0].icons == s.iterations[1].icons);
                CHECK(s.iterations[1].icons.at("Oriental pearl tower") == s.iterations[2].icons.at("Oriental pearl tower"));
                CHECK(s.iterations[1].icons.at("Metro station") != s.iterations[2].icons.at("Metro station"));
            }
            for (const auto& r : model->image_log) CHECK(r.size_px == 64);
        }
    }
}

TEST_SUITE("record and replay") {
    TEST_CASE("one iteration makes five records") {
        util::TempDir runs;
        const auto fixture = runs.path() / "fixture" / "calls.jsonl";
        fs::create_directories(fixture.parent_path());
        auto model = std::make_shared<testkit::ScriptedModel>();
        model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
        model->designer = {fenced(testing::sunflowers_sheet())};
        model->reviewer = {R"({"decision":"Accept"})"};
        auto rec = std::make_shared<llm::RecordingProvider>(testkit::scripted_provider(model), fixture);
        start(runs.path(), mllm_config("one"), serve(rec)).run();
        std::ifstream in(fixture);
        std::vector<json> records;
        for (std::string line; std::getline(in, line);) records.push_back(json::parse(line));
        REQUIRE(records.size() == 5);
        std::multiset<std::string> roles;
        for (const auto& r : records) roles.insert(r["role_id"]);
        CHECK(roles == std::multiset<std::string>{"appreciator", "style_designer", "image", "image", "reviewer"});
    }

    TEST_CASE("replay reproduces the recorded run byte for byte") {
        util::TempDir work;
        const auto fixture = work.path() / "fixture" / "calls.jsonl";
        fs::create_directories(fixture.parent_path());
        auto model = std::make_shared<testkit::ScriptedModel>();
        const auto sheet0 = testing::sunflowers_sheet();
        const auto sheet1 = style::apply_suggestions(sheet0, palette_revision());
        const auto sheet2 = style::apply_suggestions(sheet1, background_to("#fff8dc"));
        model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
        model->designer = {fenced(sheet0), fenced(sheet1), fenced(sheet2)};
        model->reviewer = {testing::fixture_text("reference/background_water_verdict.json"), style::serialize_verdict(background_to("#fff8dc")),
                           R"({"decision":"Accept"})"};
        auto rec = std::make_shared<llm::RecordingProvider>(testkit::scripted_provider(model), fixture);
        const auto recorded = start(work.path() / "recorded", mllm_config("run"), serve(rec)).run();
        REQUIRE(recorded.iterations.size() == 3);

        auto cfg = mllm_config("run");
        cfg.providers["default"].fixture_path = fixture.string();
        const auto a = run_transfer(work.path() / "a", inspiration(), testkit::synthetic_dataset(testing::neighborhood_manifest()), cfg);
        const auto b = run_transfer(work.path() / "b", inspiration(), testkit::synthetic_dataset(testing::neighborhood_manifest()), cfg);
        CHECK(a == b);
        CHECK(tree(work.path() / "a" / "run", {kEventLog}) == tree(work.path() / "b" / "run", {kEventLog}));

        const std::set<std::string> skip{kEventLog, "config.json", "session.json"};
        CHECK(tree(work.path() / "recorded" / "run", skip) == tree(work.path() / "a" / "run", skip));
        auto index_a = json::parse(util::read_text(work.path() / "a" / "run" / "session.json"));
        auto index_r = json::parse(util::read_text(work.path() / "recorded" / "run" / "session.json"));
        index_a["files"].erase("config.json");
        index_r["files"].erase("config.json");
        CHECK(index_a == index_r);
        CHECK(a.iterations.size() == 3);
        CHECK(a.iterations[2].stylesheet.background.background_color.hex() == "#fff8dc");
    }
}

TEST_SUITE("session store") {
    TEST_CASE("persist and load round trip, two runs side by side") {
        util::TempDir runs;
        auto cfg = scripted_config("first");
        cfg.scripted.verdicts = {palette_revision()};
        const auto first = start(runs.path(), cfg).run();
        auto cfg2 = scripted_config("second");
        cfg2.reviewer_source = ReviewerSource::human;
        auto second = start(runs.path(), cfg2);
        CHECK_ERROR_KIND(second.step(), ErrorKind::AwaitingHumanVerdict);

        CHECK(list_sessions(runs.path()) == std::vector<std::string>{"first", "second"});
        CHECK(load_session(runs.path(), "first") == first);
        CHECK(load_session(runs.path(), "second") == second.session());
        CHECK_ERROR_KIND(load_session(runs.path(), "third"), ErrorKind::IoError);
        CHECK_ERROR_KIND(start(runs.path(), cfg), ErrorKind::IoError);
    }

    TEST_CASE("tampering is detected") {
        util::TempDir runs;
        auto cfg = scripted_config("t");
        cfg.scripted.verdicts = {palette_revision()};
        start(runs.path(), cfg).run();
        const auto sheet_file = runs.path() / "t" / "iterations" / "1" / "stylesheet.json";
        auto text = util::read_text(sheet_file);
        text.replace(text.find("#faf3d3"), 7, "#000000");
        util::write_atomic(sheet_file, text);
        CHECK_ERROR_KIND(load_session(runs.path(), "t"), ErrorKind::CorruptSession);

        util::TempDir runs2;
        start(runs2.path(), scripted_config("u")).run();
        fs::remove(runs2.path() / "u" / "iterations" / "0" / "map.png");
        CHECK_ERROR_KIND(load_session(runs2.path(), "u"), ErrorKind::CorruptSession);

        util::TempDir runs3;
        start(runs3.path(), scripted_config("v")).run();
        util::write_atomic(runs3.path() / "v" / "session.json", std::string("{\"format\":"));
        CHECK_ERROR_KIND(load_session(runs3.path(), "v"), ErrorKind::CorruptSession);
    }

    TEST_CASE("an interrupted iteration loses only itself") {
        util::TempDir runs;
        auto cfg = scripted_config("crash");
        cfg.max_iterations = 4;
        cfg.scripted.verdicts = {background_to("#fff8dc")};
        cfg.scripted.repeat_last = true;
        {
            auto runner = start(runs.path(), cfg);
            runner.step();
            runner.step();
        }
        const auto half = runs.path() / "crash" / "iterations" / "2";
        util::write_atomic(half / "stylesheet.json", std::string("{ half written"));
        util::write_atomic(half / "map.png", std::string("garbage"));
        const auto prefix = load_session(runs.path(), "crash");
        CHECK(prefix.iterations.size() == 2);
        CHECK_FALSE(prefix.terminated());

        auto runner = Runner::resume(runs.path(), "crash", make_agents(cfg, prefix.manifest));
        const auto& s = runner.run();
        CHECK(s.iterations.size() == 4);
        CHECK(s.terminated_by == Termination::cap);
        CHECK(load_session(runs.path(), "crash") == s);
    }

    TEST_CASE("property: loop invariants over random verdict chains") {
        testing::Gen gen(7);
        const auto manifest = testing::neighborhood_manifest();
        for (int trial = 0; trial < 12; ++trial) {
            util::TempDir runs;
            auto cfg = scripted_config("p" + std::to_string(trial));
            cfg.viewport = {96, 72};
            cfg.max_iterations = gen.integer(1, 5);
            cfg.scripted.repeat_last = gen.coin();
            const int n = gen.integer(cfg.scripted.repeat_last ? 1 : 0, 5);
            for (int i = 0; i < n; ++i) {
                style::ReviewVerdict v;
                v.decision = style::Decision::revise;
                const int count = gen.integer(1, 3);
                for (int j = 0; j < count; ++j) {
                    const auto cat = static_cast<style::Category>(gen.integer(0, 4));
                    std::string element = "Background";
                    if (cat != style::Category::background) {
                        const auto& names = manifest.elements(cat);
                        element = names[static_cast<std::size_t>(gen.integer(0, static_cast<int>(names.size()) - 1))];
                    }
                    const auto vars = style::variables_for(cat);
                    const std::string var(vars[static_cast<std::size_t>(gen.integer(0, static_cast<int>(vars.size()) - 1))]);
                    style::VariableValue value;
                    switch (*style::variable_kind(cat, var)) {
                        case style::VariableKind::color: value = gen.color(); break;
                        case style::VariableKind::opacity: value = gen.opacity(); break;
                        case style::VariableKind::text: value = gen.text(); break;
                    }
                    v.suggestions.push_back({element, cat, {{var, value}}, gen.text()});
                }
                cfg.scripted.verdicts.push_back(v);
            }
            auto runner = start(runs.path(), cfg);
            const auto& s = runner.run();
            CHECK(static_cast<int>(s.iterations.size()) <= cfg.max_iterations);
            CHECK(s.terminated());
            for (std::size_t i = 0; i < s.iterations.size(); ++i) {
                CHECK(s.iterations[i].index == static_cast<int>(i));
                if (i > 0) {
                    CHECK(s.iterations[i].stylesheet ==
                          style::apply_suggestions(s.iterations[i - 1].stylesheet, s.iterations[i - 1].verdict));
                }
            }
            if (s.terminated_by == Termination::accept) {
                CHECK(s.iterations.back().verdict.decision == style::Decision::accept);
            } else {
                CHECK(static_cast<int>(s.iterations.size()) == cfg.max_iterations);
            }
            CHECK(load_session(runs.path(), s.run_id) == s);
        }
    }
}

TEST_CASE("external renderer adapter") {
    util::TempDir runs;
    util::TempDir bin;
    const auto canned = bin.path() / "canned.png";
    util::write_atomic(canned, encode_png(Image(160, 120, {250, 243, 211, 255})));
    const auto script = bin.path() / "stub-renderer";
    util::write_atomic(script, "#!/bin/sh\nwhile [ $# -gt 0 ]; do\n  if [ \"$1\" = --out ]; then cp " + canned.string() +
                                   " \"$2\"; fi\n  shift\ndone\n");
    ::chmod(script.c_str(), 0755);
    auto cfg = scripted_config("ext");
    cfg.external_renderer = script.string();
    const auto s = start(runs.path(), cfg).run();
    CHECK(s.iterations[0].render_provenance == "external:stub-renderer");
    CHECK(s.iterations[0].rendered_digest == util::sha256_hex(util::read_bytes(canned)));
}

TEST_CASE("run config json") {
    auto cfg = scripted_config("cfg");
    cfg.scripted.verdicts = {palette_revision()};
    cfg.lint.tau = 0.0;
    const auto back = RunConfig::from_json(ordered_json::parse(cfg.to_json().dump()));
    CHECK(back == cfg);
    CHECK_ERROR_KIND(RunConfig::from_json(ordered_json::parse(R"({"max_iterations": 0})")), ErrorKind::InvalidArgument);
    CHECK_ERROR_KIND(RunConfig::from_json(ordered_json::parse(R"({"reviewer_source": "oracle"})")), ErrorKind::InvalidArgument);
    CHECK_ERROR_KIND(RunConfig::from_json(ordered_json::parse(R"({"colour": 1})")), ErrorKind::InvalidArgument);
    CHECK_ERROR_KIND(RunConfig::from_json(ordered_json::parse(R"({"reviewer_source": "mllm"})")), ErrorKind::InvalidArgument);
    CHECK_ERROR_KIND(RunConfig::from_json(ordered_json::parse(R"({"run_id": "../up"})")), ErrorKind::InvalidArgument);
    CHECK_ERROR_KIND(RunConfig::from_json(ordered_json::parse(
                         R"({"appreciator":"scripted","designer":"scripted","reviewer_source":"human",
                             "icon_source":"placeholder","scripted":{"caption":"Content: x","stylesheet":null}})")),
                     ErrorKind::InvalidArgument);
    const auto human = RunConfig::from_json(ordered_json::parse(
        R"({"appreciator":"scripted","designer":"scripted","reviewer_source":"human","icon_source":"placeholder",
            "scripted":{"caption":"Content: x","stylesheet":)" + style::serialize_stylesheet(testing::sunflowers_sheet()) + "}}"));
    CHECK(human.reviewer_source == ReviewerSource::human);
    CHECK(human.scripted.stylesheet == testing::sunflowers_sheet());
}
