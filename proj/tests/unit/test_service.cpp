#include <doctest.h>

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "../support/test_support.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/service/server.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/testkit/scripted_model.hpp"
#include "cartoforge/testkit/synthetic.hpp"

using namespace cartoforge;
using namespace cartoforge::orchestrator;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

util::Bytes inspiration() {
    return encode_png(testkit::swatch_collage({{style::Color::parse("#faf3d3"), 2}, {style::Color::parse("#afcde7"), 1}}, 48, 32));
}

RunConfig scripted_config(const std::string& id, ReviewerSource reviewer) {
    RunConfig c;
    c.run_id = id;
    c.appreciator = AgentSource::scripted;
    c.designer = AgentSource::scripted;
    c.reviewer_source = reviewer;
    c.icon_source = IconSource::placeholder;
    c.viewport = {120, 90};
    c.scripted.caption = testing::fixture_text("reference/sunflowers_caption.txt");
    c.scripted.stylesheet = testing::sunflowers_sheet();
    return c;
}

std::string bundle() { return render::dataset_to_bundle(testkit::synthetic_dataset(testing::neighborhood_manifest())).dump(); }

httplib::MultipartFormDataItems upload(const RunConfig& cfg) {
    const auto img = inspiration();
    return {{"inspiration", std::string(img.begin(), img.end()), "inspiration.png", "image/png"},
            {"manifest", testing::fixture_text("manifests/neighborhood.json"), "manifest.json", "application/json"},
            {"data", bundle(), "data.json", "application/json"},
            {"config", cfg.to_json().dump(), "config.json", "application/json"}};
}

struct Served {
    util::TempDir runs;
    std::unique_ptr<service::ApiServer> server;
    std::unique_ptr<httplib::Client> http;

    explicit Served(service::ServeOptions opt = {}) { open(std::move(opt)); }

    void open(service::ServeOptions opt = {}) {
        opt.runs_dir = runs.path();
        opt.port = 0;
        server = std::make_unique<service::ApiServer>(opt);
        server->start();
        http = std::make_unique<httplib::Client>("127.0.0.1", server->port());
        http->set_read_timeout(30, 0);
    }
    void close() {
        http.reset();
        server.reset();
    }

    void persist(const RunConfig& cfg, bool run_it = true) {
        const auto m = testing::neighborhood_manifest();
        auto r = Runner::start(runs.path(), inspiration(), testkit::synthetic_dataset(m), m, cfg, make_agents(cfg, m));
        if (!run_it) return;
        try {
            r.run();
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::AwaitingHumanVerdict);
        }
    }

    json get_json(const std::string& path, int expect = 200) {
        auto res = http->Get(path);
        REQUIRE(res);
        INFO(path << " -> " << res->body);
        CHECK(res->status == expect);
        return json::parse(res->body);
    }

    httplib::Result verdict(const std::string& id, const std::string& body) {
        return http->Post("/api/sessions/" + id + "/verdict", body, "application/json");
    }
};

std::string background_verdict(const std::string& hex, std::optional<int> iteration = {}) {
    json v = {{"decision", "Revise"},
              {"suggestions", {{{"category", "background"}, {"changes", {{"background-color", hex}}}}}}};
    if (iteration) v["iteration"] = *iteration;
    return v.dump();
}

const std::string kAccept = R"({"decision":"Accept","commentary":"ok"})";

}  // namespace

TEST_CASE("listing and reading persisted sessions") {
    Served s;
    s.persist(scripted_config("alpha", ReviewerSource::scripted));
    s.persist(scripted_config("beta", ReviewerSource::scripted));
    CHECK(s.get_json("/api/sessions") == json::array({"alpha", "beta"}));

    auto res = s.http->Get("/api/sessions/alpha");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "application/json");
    CHECK(res->body == util::read_text(s.runs.path() / "alpha" / "session.json"));
    CHECK(res->get_header_value("X-Content-SHA256") == util::sha256_hex(util::Bytes(res->body.begin(), res->body.end())));
    CHECK(json::parse(res->body)["terminated_by"] == "accept");

    CHECK(s.get_json("/api/sessions/gamma", 404)["error"] == "NotFound");
    CHECK(s.get_json("/api/sessions/alpha/iterations/3", 404)["error"] == "NotFound");

    const auto it = s.get_json("/api/sessions/alpha/iterations/0");
    CHECK(it["status"] == "completed");
    CHECK(it["decision"] == "Accept");
    CHECK(it["stylesheet"]["stylesheet"]["background"]["background-color"] == "#b0c4de");
    for (const char* rel : {"map.png", "style.json", "stylesheet.json", "metrics.json", "review.json", "sprite.png"}) {
        REQUIRE(it["assets"].contains(rel));
        const std::string url = it["assets"][rel]["url"];
        auto a = s.http->Get(url);
        REQUIRE(a);
        CHECK(a->status == 200);
        CHECK(a->get_header_value("X-Content-SHA256") == it["assets"][rel]["sha256"]);
        CHECK(util::sha256_hex(util::Bytes(a->body.begin(), a->body.end())) == it["assets"][rel]["sha256"]);
    }
    CHECK(s.http->Get(it["assets"]["map.png"]["url"].get<std::string>())->get_header_value("Content-Type") == "image/png");
    CHECK(s.http->Get(it["assets"]["style.json"]["url"].get<std::string>())->get_header_value("Content-Type") ==
          "application/json");
    REQUIRE(it["run_assets"].contains("inspiration.png"));
    bool has_geojson = false;
    for (auto& [rel, entry] : it["run_assets"].items()) {
        if (rel.ends_with(".geojson")) {
            has_geojson = true;
            CHECK(s.http->Get(entry["url"].get<std::string>())->get_header_value("Content-Type") == "application/geo+json");
        }
    }
    CHECK(has_geojson);

    CHECK(s.http->Get("/api/sessions/alpha/assets/events.ndjson")->status == 404);
    CHECK(s.http->Get("/api/sessions/alpha/assets/../beta/session.json")->status == 404);
    CHECK(s.http->Get("/api/sessions/alpha/assets/iterations/0/nope.png")->status == 404);

    util::write_atomic(s.runs.path() / "alpha" / "iterations" / "0" / "map.png", std::string("not a map"));
    CHECK(s.http->Get(it["assets"]["map.png"]["url"].get<std::string>())->status == 500);
    CHECK(s.get_json("/api/sessions/alpha", 500)["error"] == "CorruptSession");
}

TEST_CASE("verdicts are refused for runs without a human reviewer") {
    Served s;
    s.persist(scripted_config("auto", ReviewerSource::scripted));
    auto res = s.verdict("auto", kAccept);
    REQUIRE(res);
    CHECK(res->status == 409);
    CHECK(s.verdict("ghost", kAccept)->status == 404);
}

TEST_CASE("human loop over HTTP") {
    Served s;
    auto res = s.http->Post("/api/sessions", upload(scripted_config("live", ReviewerSource::human)));
    REQUIRE(res);
    INFO(res->body);
    REQUIRE(res->status == 201);
    CHECK(json::parse(res->body)["run_id"] == "live");
    REQUIRE(s.server->wait_idle("live", 30));

    std::vector<json> streamed;
    std::string buffer;
    std::thread watcher([&] {
        httplib::Client c("127.0.0.1", s.server->port());
        c.set_read_timeout(60, 0);
        c.Get("/api/sessions/live/events", [&](const char* data, std::size_t n) {
            buffer.append(data, n);
            for (auto cut = buffer.find('\n'); cut != std::string::npos; cut = buffer.find('\n')) {
                streamed.push_back(json::parse(buffer.substr(0, cut)));
                buffer.erase(0, cut + 1);
            }
            return true;
        });
    });

    auto index = s.get_json("/api/sessions/live");
    REQUIRE(index["awaiting"].is_object());
    CHECK(index["awaiting"]["index"] == 0);
    CHECK(s.get_json("/api/sessions/live/iterations/0")["status"] == "awaiting");

    CHECK(s.verdict("live", "{\"decision\": \"Maybe\"}")->status == 400);
    CHECK(s.verdict("live", "not json")->status == 400);
    auto unknown = s.verdict("live", R"({"decision":"Revise","suggestions":[{"element":"Moon","category":"fill","changes":{"fill-color":"#000000"}}]})");
    CHECK(unknown->status == 400);
    CHECK(json::parse(unknown->body)["error"] == "UnknownElement");
    CHECK(s.verdict("live", background_verdict("#000000", 4))->status == 409);

    res = s.verdict("live", background_verdict("#000000", 0));
    REQUIRE(res);
    INFO(res->body);
    REQUIRE(res->status == 200);
    const auto ack = json::parse(res->body);
    CHECK(ack["iteration"] == 0);
    CHECK(ack["decision"] == "Revise");
    auto again = s.verdict("live", background_verdict("#000000", 0));
    CHECK(again->status == 200);
    CHECK(json::parse(again->body) == ack);

    REQUIRE(s.server->wait_idle("live", 30));
    const auto it1 = s.get_json("/api/sessions/live/iterations/1");
    CHECK(it1["status"] == "awaiting");
    CHECK(it1["stylesheet"]["stylesheet"]["background"]["background-color"] == "#000000");
    const auto map1 = s.http->Get(it1["assets"]["map.png"]["url"].get<std::string>());
    CHECK(decode_image(util::Bytes(map1->body.begin(), map1->body.end())).at(0, 0) == Rgba{0, 0, 0, 255});
    CHECK(json::parse(s.verdict("live", background_verdict("#000000", 0))->body) == ack);

    res = s.verdict("live", kAccept);
    REQUIRE(res->status == 200);
    CHECK(json::parse(res->body)["iteration"] == 1);
    watcher.join();

    const auto final_index = s.get_json("/api/sessions/live");
    CHECK(final_index["terminated_by"] == "accept");
    CHECK(final_index["iterations"].size() == 2);
    CHECK(s.verdict("live", kAccept)->status == 409);
    CHECK(json::parse(s.verdict("live", background_verdict("#123456", 1))->body)["decision"] == "Accept");

    REQUIRE(!streamed.empty());
    CHECK(streamed.back()["event"] == "run-terminated");
    CHECK(streamed.back()["terminated_by"] == "accept");
    int last = 0;
    int awaiting = 0;
    for (const auto& e : streamed) {
        CHECK(e["run_id"] == "live");
        CHECK(e["iteration"].get<int>() >= last);
        last = e["iteration"].get<int>();
        awaiting += e["event"] == "awaiting-verdict";
    }
    CHECK(awaiting == 2);

    auto closed = s.http->Get("/api/sessions/live/events");
    REQUIRE(closed);
    CHECK(closed->status == 200);
    CHECK(closed->get_header_value("Content-Type") == "application/x-ndjson");
    CHECK(json::parse(closed->body.substr(closed->body.rfind('\n', closed->body.size() - 2) + 1))["event"] == "run-terminated");
}

TEST_CASE("an awaiting run survives a server restart") {
    Served s;
    s.persist(scripted_config("paused", ReviewerSource::human));
    s.close();
    s.open();
    auto res = s.verdict("paused", kAccept);
    REQUIRE(res);
    INFO(res->body);
    CHECK(res->status == 200);
    REQUIRE(s.server->wait_idle("paused", 30));
    CHECK(s.get_json("/api/sessions/paused")["terminated_by"] == "accept");
}

TEST_CASE("run creation errors") {
    service::ServeOptions opt;
    opt.max_inspiration_bytes = 64;
    Served s(opt);
    auto res = s.http->Post("/api/sessions", upload(scripted_config("big", ReviewerSource::scripted)));
    REQUIRE(res);
    CHECK(res->status == 413);

    Served t;
    auto items = upload(scripted_config("bad", ReviewerSource::scripted));
    items.pop_back();
    items.push_back({"config", R"({"max_iterations": 0})", "config.json", "application/json"});
    CHECK(t.http->Post("/api/sessions", items)->status == 400);
    items = upload(scripted_config("bad", ReviewerSource::scripted));
    items[0].content = "not an image";
    CHECK(t.http->Post("/api/sessions", items)->status == 400);
    items = upload(scripted_config("bad", ReviewerSource::scripted));
    items.erase(items.begin() + 2);
    CHECK(t.http->Post("/api/sessions", items)->status == 400);
    CHECK(t.http->Post("/api/sessions", "{}", "application/json")->status == 400);

    auto ok = t.http->Post("/api/sessions", upload(scripted_config("dup", ReviewerSource::scripted)));
    CHECK(ok->status == 201);
    CHECK(t.http->Post("/api/sessions", upload(scripted_config("dup", ReviewerSource::scripted)))->status == 409);
    REQUIRE(t.server->wait_idle("dup", 30));
    CHECK(t.get_json("/api/sessions") == json::array({"dup"}));
}

TEST_CASE("credentials stay out of the session directory") {
    const std::string secret = "sk-test-5f0c8e1d-never-persist";
    ::setenv("CARTOFORGE_STUDIO_KEY", secret.c_str(), 1);
    auto model = std::make_shared<testkit::ScriptedModel>();
    model->appreciator = {testing::fixture_text("reference/sunflowers_caption.txt")};
    model->designer = {"```json\n" + style::serialize_stylesheet(testing::sunflowers_sheet()) + "```"};
    model->reviewer = {R"({"decision":"Accept"})"};
    service::ServeOptions opt;
    opt.provider_factory = [model](std::string_view, const llm::ProviderConfig& pc) {
        CHECK(pc.credential_env == "CARTOFORGE_STUDIO_KEY");
        return testkit::scripted_provider(model);
    };
    Served s(opt);
    RunConfig cfg;
    cfg.run_id = "keyed";
    cfg.viewport = {120, 90};
    llm::ProviderConfig p;
    p.kind = llm::ProviderKind::remote_chat;
    p.endpoint = "https://models.invalid/v1/chat/completions";
    p.model = "m";
    p.credential_env = "CARTOFORGE_STUDIO_KEY";
    cfg.providers["default"] = p;
    auto res = s.http->Post("/api/sessions", upload(cfg));
    REQUIRE(res);
    INFO(res->body);
    REQUIRE(res->status == 201);
    REQUIRE(s.server->wait_idle("keyed", 30));
    CHECK(s.get_json("/api/sessions/keyed")["terminated_by"] == "accept");
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(s.runs.path())) {
        if (!e.is_regular_file()) continue;
        ++files;
        CHECK(util::read_text(e.path()).find(secret) == std::string::npos);
    }
    CHECK(files > 10);
    CHECK(util::read_text(s.runs.path() / "keyed" / "config.json").find("CARTOFORGE_STUDIO_KEY") != std::string::npos);
    ::unsetenv("CARTOFORGE_STUDIO_KEY");
}
