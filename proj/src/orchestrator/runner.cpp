#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>

#include "cartoforge/error.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/fs.hpp"

namespace cartoforge::orchestrator {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

std::string fresh_run_id() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    std::random_device rd;
    char tail[8];
    std::snprintf(tail, sizeof tail, "%04x", static_cast<unsigned>(rd() & 0xffff));
    return std::string(buf) + "-" + tail;
}

std::string text_file(const ordered_json& doc) { return doc.dump(2) + "\n"; }

util::Bytes as_bytes(std::string_view text) { return util::Bytes(text.begin(), text.end()); }

}  // namespace

ordered_json ApiEvent::to_json() const {
    ordered_json out;
    out["event"] = kind;
    out["run_id"] = run_id;
    out["iteration"] = iteration;
    out["timestamp"] = timestamp;
    for (const auto& [k, v] : data.items()) out[k] = v;
    return out;
}

Runner Runner::start(const fs::path& runs_dir, const util::Bytes& inspiration, const render::MapDataset& dataset,
                     const style::LayerManifest& manifest, RunConfig config, Agents agents) {
    config.validate();
    manifest.validate();
    dataset.validate(manifest);
    if (config.run_id.empty()) config.run_id = fresh_run_id();
    config = RunConfig::from_json(config.to_json());

    Runner r;
    r.dir_ = runs_dir / config.run_id;
    if (fs::exists(r.dir_)) throw Error(ErrorKind::IoError, "run directory " + r.dir_.string() + " already exists");
    r.agents_ = std::move(agents);
    r.dataset_ = dataset;

    RunSession& s = r.session_;
    s.run_id = config.run_id;
    s.config = config;
    s.inspiration = encode_png(decode_image(inspiration));
    s.manifest = manifest;
    s.dataset_digest = dataset.digest();
    s.template_hashes = prompt::template_hashes();

    const auto put = [&](const std::string& rel, const util::Bytes& bytes) {
        util::write_atomic(r.dir_ / rel, bytes);
        s.files[rel] = util::sha256_hex(bytes);
    };
    put("config.json", as_bytes(text_file(config.to_json())));
    put("inspiration.png", s.inspiration);
    put("manifest.json", as_bytes(text_file(style::manifest_to_json(manifest))));
    render::save_dataset(dataset, r.dir_ / "data");
    for (const auto& entry : fs::recursive_directory_iterator(r.dir_ / "data")) {
        if (!entry.is_regular_file()) continue;
        s.files[fs::relative(entry.path(), r.dir_).generic_string()] = util::sha256_hex(util::read_bytes(entry.path()));
    }

    try {
        s.caption = r.agents_.appreciator->describe(s.inspiration);
        put("caption.json", as_bytes(text_file(caption_to_json(s.caption))));
    } catch (const std::exception& e) {
        r.fail(e);
        throw;
    }
    r.write_index();
    return r;
}

Runner Runner::resume(const fs::path& runs_dir, const std::string& run_id, Agents agents) {
    Runner r;
    r.dir_ = runs_dir / run_id;
    r.session_ = load_session(runs_dir, run_id);
    r.dataset_ = render::load_dataset(r.dir_ / "data");
    if (r.dataset_.digest() != r.session_.dataset_digest) {
        throw Error(ErrorKind::CorruptSession, "run " + run_id + ": dataset digest mismatch");
    }
    r.agents_ = std::move(agents);

    const IterationRecord* last = r.session_.awaiting       ? &*r.session_.awaiting
                                  : r.session_.iterations.empty() ? nullptr
                                                                  : &r.session_.iterations.back();
    if (last) {
        r.agents_.designer->restore(last->designer_transcript);
        const fs::path idir = r.dir_ / "iterations" / std::to_string(last->index);
        for (const auto& [name, spec] : last->stylesheet.icons) {
            r.icon_cache_[name] = {spec.expectation, util::read_bytes(idir / "icons" / (compiler::slug(name) + ".png"))};
        }
    }
    return r;
}

IterationRecord Runner::step() {
    if (session_.terminated()) {
        throw Error(ErrorKind::SessionTerminated,
                    "run " + session_.run_id + " ended by " + std::string(to_string(*session_.terminated_by)));
    }
    try {
        return advance();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::AwaitingHumanVerdict) fail(e);
        throw;
    } catch (const std::exception& e) {
        fail(e);
        throw;
    }
}

const RunSession& Runner::run() {
    while (!session_.terminated()) step();
    return session_;
}

void Runner::submit_verdict(const style::ReviewVerdict& verdict) {
    if (session_.terminated()) throw Error(ErrorKind::SessionTerminated, "run " + session_.run_id + " has ended");
    if (!session_.awaiting) throw Error(ErrorKind::InvalidArgument, "run " + session_.run_id + " is not awaiting a verdict");
    verdict.validate();
    if (verdict.decision == style::Decision::revise) (void)style::apply_suggestions(session_.awaiting->stylesheet, verdict);
    pending_ = verdict;
}

IterationRecord Runner::advance() {
    if (session_.awaiting) {
        if (!pending_) {
            throw Error(ErrorKind::AwaitingHumanVerdict,
                        "iteration " + std::to_string(session_.awaiting->index) + " waits for a human verdict");
        }
        auto verdict = std::move(*pending_);
        pending_.reset();
        return finalize(std::move(verdict), "human");
    }

    const auto& cfg = session_.config;
    const int k = static_cast<int>(session_.iterations.size());
    emit("iteration-started", k);

    style::StyleSheet sheet = k == 0 ? agents_.designer->design(session_.inspiration, session_.manifest, session_.caption)
                                     : agents_.designer->revise(session_.iterations.back().stylesheet,
                                                                session_.iterations.back().verdict);
    if (const auto report = style::validate_completeness(sheet, session_.manifest); !report.complete()) {
        throw Error(ErrorKind::InvalidStylesheet, report.describe());
    }

    IterationRecord rec;
    rec.index = k;
    rec.stylesheet = sheet;
    rec.designer_transcript = agents_.designer->transcript();

    const fs::path idir = dir_ / "iterations" / std::to_string(k);
    fs::remove_all(idir);
    const auto put = [&](const std::string& rel, const util::Bytes& bytes) {
        util::write_atomic(idir / rel, bytes);
        rec.files[rel] = util::sha256_hex(bytes);
    };
    put("stylesheet.json", as_bytes(style::serialize_stylesheet(sheet)));

    std::vector<std::pair<std::string, util::Bytes>> icon_bytes;
    std::map<std::string, Image> icon_images;
    for (const auto& [name, spec] : sheet.icons) {
        auto it = icon_cache_.find(name);
        if (cfg.icon_regen_policy == IconRegenPolicy::every_iteration || it == icon_cache_.end() ||
            it->second.first != spec.expectation) {
            const auto drawn = agents_.icon_designer->draw(name, spec, cfg.icon_size_px);
            icon_cache_[name] = {spec.expectation, encode_png(decode_image(drawn))};
        }
        const auto& bytes = icon_cache_[name].second;
        put("icons/" + compiler::slug(name) + ".png", bytes);
        rec.icons[name] = util::sha256_hex(bytes);
        icon_bytes.emplace_back(name, bytes);
        icon_images.emplace(name, decode_image(bytes));
    }
    const auto sprite = compiler::build_sprite(icon_bytes);
    if (!icon_bytes.empty()) {
        put("sprite.png", sprite.atlas_png());
        put("sprite.json", as_bytes(text_file(sprite.index_json())));
    }

    std::vector<metrics::LintWarning> notes;
    rec.compiled = agents_.implementer->implement(sheet, session_.manifest,
                                                  compiler::SourceConfig::for_manifest(session_.manifest), notes);
    put("style.json", as_bytes(rec.compiled.serialize()));

    render::RenderedMap map;
    if (cfg.external_renderer.empty()) {
        map = render::render(dataset_, sheet, icon_images, cfg.viewport, {cfg.label_field});
    } else {
        map = render::external_render(rec.compiled, sprite, dataset_, cfg.viewport,
                                      render::AdapterSpec::parse(cfg.external_renderer));
    }
    const auto map_png = encode_png(map.pixels);
    put("map.png", map_png);
    rec.rendered_digest = util::sha256_hex(map_png);
    rec.render_provenance = map.provenance;

    rec.metrics = metrics::evaluate(decode_image(session_.inspiration), map.pixels, cfg.bins_per_channel);
    rec.metrics.warnings = metrics::distinctness_lint(sheet, cfg.lint);
    rec.metrics.warnings.insert(rec.metrics.warnings.end(), notes.begin(), notes.end());
    put("metrics.json", as_bytes(text_file(metrics::to_json(rec.metrics))));
    put("designer.json", as_bytes(text_file(transcript_to_json(rec.designer_transcript, session_.inspiration))));

    if (cfg.reviewer_source == ReviewerSource::human) {
        session_.awaiting = rec;
        write_index();
        emit("awaiting-verdict", k, {{"similarity", rec.metrics.similarity}});
        throw Error(ErrorKind::AwaitingHumanVerdict, "iteration " + std::to_string(k) + " waits for a human verdict");
    }
    session_.awaiting = rec;
    auto verdict = agents_.reviewer->review(session_.inspiration, map_png, rec.metrics, k);
    return finalize(std::move(verdict), std::string(agents_.reviewer->source()));
}

IterationRecord Runner::finalize(style::ReviewVerdict verdict, std::string reviewer) {
    verdict.validate();
    const std::string review_text = style::serialize_verdict(verdict);
    IterationRecord rec = std::move(*session_.awaiting);
    rec.verdict = style::verdict_from_json(style::parse_json(review_text));
    rec.reviewer = std::move(reviewer);
    const auto review = as_bytes(review_text);
    util::write_atomic(dir_ / "iterations" / std::to_string(rec.index) / "review.json", review);
    rec.files["review.json"] = util::sha256_hex(review);

    session_.awaiting.reset();
    session_.iterations.push_back(rec);
    if (rec.verdict.decision == style::Decision::accept) {
        session_.terminated_by = Termination::accept;
    } else if (static_cast<int>(session_.iterations.size()) >= session_.config.max_iterations) {
        session_.terminated_by = Termination::cap;
    }
    write_index();
    emit("iteration-completed", rec.index,
         {{"similarity", rec.metrics.similarity}, {"decision", std::string(style::to_string(rec.verdict.decision))}});
    if (session_.terminated_by) {
        emit("run-terminated", rec.index, {{"terminated_by", std::string(to_string(*session_.terminated_by))}});
    }
    return rec;
}

void Runner::fail(const std::exception& e) {
    session_.awaiting.reset();
    session_.terminated_by = Termination::error;
    session_.error = e.what();
    try {
        write_index();
        emit("run-terminated", static_cast<int>(session_.iterations.size()),
             {{"terminated_by", "error"}, {"error", session_.error}});
    } catch (const std::exception&) {
    }
}

void Runner::emit(std::string kind, int iteration, ordered_json data) {
    ApiEvent ev{std::move(kind), session_.run_id, iteration, utc_now(), std::move(data)};
    {
        std::ofstream out(dir_ / kEventLog, std::ios::app | std::ios::binary);
        out << ev.to_json().dump() << '\n';
    }
    if (sink_) sink_(ev);
}

void Runner::write_index() { persist_session(dir_.parent_path(), session_); }

RunSession run_transfer(const fs::path& runs_dir, const util::Bytes& inspiration, const render::MapDataset& dataset,
                        const RunConfig& config) {
    const auto manifest = dataset.manifest();
    auto runner = Runner::start(runs_dir, inspiration, dataset, manifest, config, make_agents(config, manifest));
    return runner.run();
}

}  // namespace cartoforge::orchestrator
