#include "cartoforge/service/server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>

#include "cartoforge/error.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/fs.hpp"

namespace cartoforge::service {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace std::chrono_literals;

namespace {

/// One verdict waiting for its run's worker.
struct Letter {
    style::ReviewVerdict verdict;
    std::promise<void> taken;
};

struct RunWorker {
    std::mutex m;
    std::condition_variable cv;
    std::deque<std::shared_ptr<Letter>> mailbox;
    /// Index of the iteration waiting for a human verdict, if any.
    std::optional<int> awaiting;
    bool finished = false;
    bool stop = false;
    std::optional<orchestrator::Runner> runner;
    std::thread thread;
    /// Serialises verdict posts for this run.
    std::mutex post_m;
    /// iteration -> acknowledgement already sent
    std::map<int, ordered_json> acks;

    void body() {
        auto& r = *runner;
        while (true) {
            {
                std::lock_guard lk(m);
                if (stop) break;
            }
            try {
                r.step();
                if (r.session().terminated()) break;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::AwaitingHumanVerdict) break;
                std::shared_ptr<Letter> letter;
                {
                    std::unique_lock lk(m);
                    awaiting = r.session().awaiting->index;
                    cv.notify_all();
                    cv.wait(lk, [&] { return stop || !mailbox.empty(); });
                    if (stop) break;
                    letter = mailbox.front();
                    mailbox.pop_front();
                }
                try {
                    r.submit_verdict(letter->verdict);
                    {
                        std::lock_guard lk(m);
                        awaiting.reset();
                    }
                    letter->taken.set_value();
                } catch (...) {
                    letter->taken.set_exception(std::current_exception());
                }
            } catch (...) {
                break;
            }
        }
        std::lock_guard lk(m);
        finished = true;
        awaiting.reset();
        cv.notify_all();
    }
};

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedJson:
        case ErrorKind::SchemaViolation:
        case ErrorKind::MissingBackground:
        case ErrorKind::UnknownElement:
        case ErrorKind::IllegalVariableForCategory:
        case ErrorKind::IncompleteSheet:
        case ErrorKind::UndecodableImage:
        case ErrorKind::EmptyViewport:
        case ErrorKind::InvalidArgument:
        case ErrorKind::InvalidStylesheet:
            return 400;
        case ErrorKind::SessionTerminated:
        case ErrorKind::AwaitingHumanVerdict:
            return 409;
        case ErrorKind::ProviderTimeout:
        case ErrorKind::ProviderHttpError:
        case ErrorKind::ReplayMiss:
        case ErrorKind::NoJsonFound:
        case ErrorKind::EmptyReply:
            return 502;
        default:
            return 500;
    }
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    ordered_json body;
    body["error"] = kind;
    body["message"] = message;
    send_json(res, status, body);
}

void send_error(httplib::Response& res, const Error& e) {
    send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
}

std::string content_type_of(const std::string& path) {
    const auto ext = fs::path(path).extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".json") return "application/json";
    if (ext == ".geojson") return "application/geo+json";
    if (ext == ".ndjson" || ext == ".jsonl") return "application/x-ndjson";
    return "application/octet-stream";
}

void send_bytes(httplib::Response& res, const std::string& bytes, const std::string& type) {
    const auto digest = util::sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    res.set_header("ETag", "\"" + digest + "\"");
    res.set_header("X-Content-SHA256", digest);
    res.set_content(bytes, type);
}

bool plain_id(const std::string& id) {
    return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos && id.find('\\') == std::string::npos;
}

ordered_json ack_for(const std::string& run_id, int iteration, style::Decision decision) {
    ordered_json a;
    a["run_id"] = run_id;
    a["iteration"] = iteration;
    a["decision"] = std::string(style::to_string(decision));
    a["accepted"] = true;
    return a;
}

}  // namespace

struct ApiServer::Impl {
    ServeOptions opt;
    httplib::Server http;
    std::thread listener;
    int bound_port = -1;
    std::atomic<bool> stopping{false};

    std::mutex workers_m;
    std::map<std::string, std::shared_ptr<RunWorker>> workers;
    std::mutex resume_m;

    explicit Impl(ServeOptions o) : opt(std::move(o)) { routes(); }

    fs::path run_dir(const std::string& id) const { return opt.runs_dir / id; }

    bool known(const std::string& id) const {
        return plain_id(id) && fs::is_regular_file(run_dir(id) / "session.json");
    }

    void launch(const std::string& id, orchestrator::Runner runner) {
        auto w = std::make_shared<RunWorker>();
        w->runner.emplace(std::move(runner));
        {
            std::lock_guard lk(workers_m);
            workers[id] = w;
        }
        w->thread = std::thread([w] { w->body(); });
    }

    std::shared_ptr<RunWorker> worker(const std::string& id) {
        std::lock_guard lk(workers_m);
        auto it = workers.find(id);
        return it == workers.end() ? nullptr : it->second;
    }

    /// The live worker of a persisted run, resuming it when it awaits a verdict.
    std::shared_ptr<RunWorker> worker_for(const std::string& id, const orchestrator::RunSession& s) {
        std::lock_guard resuming(resume_m);
        if (auto w = worker(id); w) {
            std::lock_guard lk(w->m);
            if (!w->finished) return w;
        }
        if (s.terminated() || !s.awaiting) return nullptr;
        auto agents = orchestrator::make_agents(s.config, s.manifest, opt.provider_factory);
        launch(id, orchestrator::Runner::resume(opt.runs_dir, id, std::move(agents)));
        return worker(id);
    }

    void routes() {
        http.set_payload_max_length(opt.max_inspiration_bytes + opt.max_data_bytes + (4u << 20));

        http.Get("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
            try {
                ordered_json ids = ordered_json::array();
                if (fs::is_directory(opt.runs_dir)) {
                    for (const auto& id : orchestrator::list_sessions(opt.runs_dir)) ids.push_back(id);
                }
                send_json(res, 200, ids);
            } catch (const Error& e) {
                send_error(res, e);
            }
        });

        http.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!known(id)) return send_error(res, 404, "NotFound", "unknown session " + id);
            try {
                const auto text = util::read_text(run_dir(id) / "session.json");
                orchestrator::load_session(opt.runs_dir, id);
                send_bytes(res, text, "application/json");
            } catch (const Error& e) {
                send_error(res, e);
            }
        });

        http.Get(R"(/api/sessions/([^/]+)/iterations/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!known(id)) return send_error(res, 404, "NotFound", "unknown session " + id);
            try {
                const int k = std::stoi(req.matches[2]);
                const auto s = orchestrator::load_session(opt.runs_dir, id);
                const orchestrator::IterationRecord* rec = nullptr;
                bool completed = true;
                if (k < static_cast<int>(s.iterations.size())) {
                    rec = &s.iterations[static_cast<std::size_t>(k)];
                } else if (s.awaiting && s.awaiting->index == k) {
                    rec = &*s.awaiting;
                    completed = false;
                }
                if (!rec) return send_error(res, 404, "NotFound", "run " + id + " has no iteration " + std::to_string(k));
                send_json(res, 200, iteration_view(s, *rec, completed));
            } catch (const Error& e) {
                send_error(res, e);
            }
        });

        http.Get(R"(/api/sessions/([^/]+)/assets/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const std::string path = req.matches[2];
            if (!known(id)) return send_error(res, 404, "NotFound", "unknown session " + id);
            try {
                const auto digest = indexed_digest(id, path);
                if (!digest) return send_error(res, 404, "NotFound", "no asset " + path + " in run " + id);
                const auto bytes = util::read_bytes(run_dir(id) / path);
                if (util::sha256_hex(bytes) != *digest) {
                    return send_error(res, 500, "CorruptSession", "asset " + path + " does not match its digest");
                }
                send_bytes(res, std::string(bytes.begin(), bytes.end()), content_type_of(path));
            } catch (const Error& e) {
                send_error(res, e);
            }
        });

        http.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });

        http.Post(R"(/api/sessions/([^/]+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
            post_verdict(req.matches[1], req.body, res);
        });

        http.Get(R"(/api/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            if (!known(id)) return send_error(res, 404, "NotFound", "unknown session " + id);
            stream_events(id, res);
        });
    }

    /// Digest of a file named in session.json, or nothing when it is not indexed.
    std::optional<std::string> indexed_digest(const std::string& id, const std::string& path) const {
        const auto index = json::parse(util::read_text(run_dir(id) / "session.json"));
        if (auto it = index["files"].find(path); it != index["files"].end()) return it->get<std::string>();
        constexpr std::string_view prefix = "iterations/";
        if (!path.starts_with(prefix)) return std::nullopt;
        const auto slash = path.find('/', prefix.size());
        if (slash == std::string::npos) return std::nullopt;
        const std::string k = path.substr(prefix.size(), slash - prefix.size());
        const std::string rel = path.substr(slash + 1);
        const auto lookup = [&](const json& entry) -> std::optional<std::string> {
            if (entry.is_null() || std::to_string(entry["index"].get<int>()) != k) return std::nullopt;
            if (auto f = entry["files"].find(rel); f != entry["files"].end()) return f->get<std::string>();
            return std::nullopt;
        };
        for (const auto& e : index["iterations"]) {
            if (auto d = lookup(e)) return d;
        }
        return lookup(index["awaiting"]);
    }

    ordered_json iteration_view(const orchestrator::RunSession& s, const orchestrator::IterationRecord& r,
                                bool completed) const {
        const std::string base = "/api/sessions/" + s.run_id + "/assets/";
        ordered_json v;
        v["run_id"] = s.run_id;
        v["index"] = r.index;
        v["status"] = completed ? "completed" : "awaiting";
        v["similarity"] = r.similarity();
        v["decision"] = completed ? ordered_json(std::string(style::to_string(r.verdict.decision))) : ordered_json(nullptr);
        v["reviewer"] = r.reviewer;
        v["render_provenance"] = r.render_provenance;
        v["map_digest"] = r.rendered_digest;
        v["stylesheet"] = style::stylesheet_to_json(r.stylesheet);
        v["verdict"] = completed ? style::verdict_to_json(r.verdict) : ordered_json(nullptr);
        v["metrics"] = metrics::to_json(r.metrics);
        v["icons"] = r.icons;
        v["assets"] = ordered_json::object();
        for (const auto& [rel, digest] : r.files) {
            v["assets"][rel] = {{"url", base + "iterations/" + std::to_string(r.index) + "/" + rel}, {"sha256", digest}};
        }
        v["run_assets"] = ordered_json::object();
        for (const auto& [rel, digest] : s.files) v["run_assets"][rel] = {{"url", base + rel}, {"sha256", digest}};
        return v;
    }

    void create(const httplib::Request& req, httplib::Response& res) {
        if (!req.is_multipart_form_data()) {
            return send_error(res, 400, "InvalidArgument", "expected multipart/form-data");
        }
        for (const char* field : {"inspiration", "manifest", "data"}) {
            if (!req.has_file(field)) return send_error(res, 400, "InvalidArgument", std::string("missing part ") + field);
        }
        const auto inspiration = req.get_file_value("inspiration").content;
        const auto data = req.get_file_value("data").content;
        if (inspiration.size() > opt.max_inspiration_bytes) {
            return send_error(res, 413, "PayloadTooLarge",
                              "inspiration exceeds " + std::to_string(opt.max_inspiration_bytes) + " bytes");
        }
        if (data.size() > opt.max_data_bytes) {
            return send_error(res, 413, "PayloadTooLarge", "data exceeds " + std::to_string(opt.max_data_bytes) + " bytes");
        }
        try {
            const auto manifest = style::parse_manifest(req.get_file_value("manifest").content);
            orchestrator::RunConfig config;
            if (req.has_file("config")) {
                config = orchestrator::RunConfig::from_json(style::parse_json(req.get_file_value("config").content));
            }
            render::MapDataset dataset;
            try {
                dataset = render::dataset_from_bundle(json::parse(data));
            } catch (const json::exception& e) {
                throw Error(ErrorKind::MalformedJson, std::string("data: ") + e.what());
            }
            const util::Bytes image(inspiration.begin(), inspiration.end());
            config.validate();
            if (!config.run_id.empty() && fs::exists(run_dir(config.run_id))) {
                return send_error(res, 409, "Conflict", "run " + config.run_id + " already exists");
            }
            auto agents = orchestrator::make_agents(config, manifest, opt.provider_factory);
            auto runner = orchestrator::Runner::start(opt.runs_dir, image, dataset, manifest, config, std::move(agents));
            const std::string id = runner.session().run_id;
            launch(id, std::move(runner));
            ordered_json body;
            body["run_id"] = id;
            body["url"] = "/api/sessions/" + id;
            body["events"] = "/api/sessions/" + id + "/events";
            send_json(res, 201, body);
        } catch (const Error& e) {
            send_error(res, e);
        }
    }

    void post_verdict(const std::string& id, const std::string& body, httplib::Response& res) {
        if (!known(id)) return send_error(res, 404, "NotFound", "unknown session " + id);
        std::optional<int> target;
        style::ReviewVerdict verdict;
        try {
            auto doc = style::parse_json(body);
            if (!doc.is_object()) throw Error(ErrorKind::SchemaViolation, "verdict must be an object");
            if (auto it = doc.find("iteration"); it != doc.end()) {
                if (!it->is_number_integer()) throw Error(ErrorKind::SchemaViolation, "iteration must be an integer");
                target = it->get<int>();
                doc.erase("iteration");
            }
            verdict = style::verdict_from_json(doc);
        } catch (const Error& e) {
            return send_error(res, 400, to_string(e.kind()), e.what());
        }

        try {
            const auto s = orchestrator::load_session(opt.runs_dir, id);
            if (s.config.reviewer_source != orchestrator::ReviewerSource::human) {
                return send_error(res, 409, "Conflict", "run " + id + " is not reviewed by a human");
            }
            const auto persisted_ack = [&](int k) -> std::optional<ordered_json> {
                if (k < 0 || k >= static_cast<int>(s.iterations.size())) return std::nullopt;
                const auto& r = s.iterations[static_cast<std::size_t>(k)];
                if (r.reviewer != "human") return std::nullopt;
                return ack_for(id, k, r.verdict.decision);
            };

            auto w = worker_for(id, s);
            if (!w) {
                const int k = target.value_or(static_cast<int>(s.iterations.size()) - 1);
                if (auto a = persisted_ack(k); a && target) return send_json(res, 200, *a);
                return send_error(res, 409, "Conflict", "run " + id + " is not awaiting a verdict");
            }

            std::lock_guard post(w->post_m);
            if (target) {
                if (auto it = w->acks.find(*target); it != w->acks.end()) return send_json(res, 200, it->second);
                if (auto a = persisted_ack(*target)) return send_json(res, 200, *a);
            }
            std::optional<int> awaiting;
            {
                std::unique_lock lk(w->m);
                w->cv.wait_for(lk, std::chrono::duration<double>(opt.verdict_timeout_seconds),
                               [&] { return w->finished || w->awaiting.has_value() || !s.awaiting; });
                awaiting = w->awaiting;
            }
            if (!awaiting) {
                if (!target && !w->acks.empty()) return send_json(res, 200, w->acks.rbegin()->second);
                return send_error(res, 409, "Conflict", "run " + id + " is not awaiting a verdict");
            }
            if (target && *target != *awaiting) {
                return send_error(res, 409, "Conflict",
                                  "run " + id + " awaits iteration " + std::to_string(*awaiting) + ", not " +
                                      std::to_string(*target));
            }
            auto letter = std::make_shared<Letter>();
            letter->verdict = verdict;
            auto taken = letter->taken.get_future();
            {
                std::lock_guard lk(w->m);
                w->mailbox.push_back(letter);
                w->cv.notify_all();
            }
            if (taken.wait_for(std::chrono::duration<double>(opt.verdict_timeout_seconds)) != std::future_status::ready) {
                return send_error(res, 503, "Timeout", "run worker did not take the verdict");
            }
            taken.get();
            const auto ack = ack_for(id, *awaiting, verdict.decision);
            w->acks[*awaiting] = ack;
            send_json(res, 200, ack);
        } catch (const Error& e) {
            send_error(res, e);
        }
    }

    void stream_events(const std::string& id, httplib::Response& res) {
        struct Tail {
            std::size_t offset = 0;
            std::string partial;
            bool ended = false;
            std::chrono::steady_clock::time_point quiet_since = std::chrono::steady_clock::now();
        };
        auto tail = std::make_shared<Tail>();
        const fs::path log = run_dir(id) / orchestrator::kEventLog;
        const fs::path index = run_dir(id) / "session.json";
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "application/x-ndjson", [this, tail, log, index](std::size_t, httplib::DataSink& sink) {
                if (stopping) return false;
                std::string fresh;
                {
                    std::ifstream in(log, std::ios::binary);
                    if (in) {
                        in.seekg(static_cast<std::streamoff>(tail->offset));
                        fresh.assign(std::istreambuf_iterator<char>(in), {});
                        tail->offset += fresh.size();
                    }
                }
                tail->partial += fresh;
                const auto cut = tail->partial.rfind('\n');
                if (cut != std::string::npos) {
                    const std::string lines = tail->partial.substr(0, cut + 1);
                    tail->partial.erase(0, cut + 1);
                    if (!sink.write(lines.data(), lines.size())) return false;
                    std::size_t start = 0;
                    while (start < lines.size()) {
                        const auto end = lines.find('\n', start);
                        const auto ev = json::parse(lines.substr(start, end - start), nullptr, false);
                        if (!ev.is_discarded() && ev.value("event", "") == "run-terminated") tail->ended = true;
                        start = end + 1;
                    }
                    tail->quiet_since = std::chrono::steady_clock::now();
                }
                if (tail->ended) {
                    sink.done();
                    return true;
                }
                if (fresh.empty() && std::chrono::steady_clock::now() - tail->quiet_since > 1s) {
                    const auto doc = json::parse(util::read_text(index), nullptr, false);
                    if (!doc.is_discarded() && !doc["terminated_by"].is_null()) {
                        sink.done();
                        return true;
                    }
                }
                if (fresh.empty()) std::this_thread::sleep_for(50ms);
                return true;
            });
    }
};

ApiServer::ApiServer(ServeOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
    if (impl_->bound_port >= 0) return impl_->bound_port;
    fs::create_directories(impl_->opt.runs_dir);
    if (impl_->opt.port == 0) {
        impl_->bound_port = impl_->http.bind_to_any_port(impl_->opt.host);
    } else if (impl_->http.bind_to_port(impl_->opt.host, impl_->opt.port)) {
        impl_->bound_port = impl_->opt.port;
    }
    if (impl_->bound_port < 0) {
        throw Error(ErrorKind::IoError, "cannot bind " + impl_->opt.host + ":" + std::to_string(impl_->opt.port));
    }
    return impl_->bound_port;
}

void ApiServer::listen() {
    bind();
    impl_->http.listen_after_bind();
}

void ApiServer::start() {
    bind();
    impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_ || impl_->stopping.exchange(true)) return;
    impl_->http.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
    std::map<std::string, std::shared_ptr<RunWorker>> workers;
    {
        std::lock_guard lk(impl_->workers_m);
        workers.swap(impl_->workers);
    }
    for (auto& [id, w] : workers) {
        {
            std::lock_guard lk(w->m);
            w->stop = true;
            w->cv.notify_all();
        }
        if (w->thread.joinable()) w->thread.join();
    }
}

int ApiServer::port() const noexcept { return impl_->bound_port; }

bool ApiServer::wait_idle(const std::string& run_id, double timeout_seconds) {
    auto w = impl_->worker(run_id);
    if (!w) return false;
    std::unique_lock lk(w->m);
    return w->cv.wait_for(lk, std::chrono::duration<double>(timeout_seconds),
                          [&] { return w->finished || w->awaiting.has_value(); });
}

}  // namespace cartoforge::service
