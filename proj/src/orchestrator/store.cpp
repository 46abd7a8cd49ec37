#include <algorithm>
#include <system_error>

#include "cartoforge/error.hpp"
#include "cartoforge/orchestrator/orchestrator.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/fs.hpp"

namespace cartoforge::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "cartoforge-session/1";
constexpr const char* kInspirationRef = "inspiration.png";

ordered_json record_entry(const IterationRecord& r, bool finalized) {
    ordered_json e;
    e["index"] = r.index;
    e["similarity"] = r.metrics.similarity;
    e["decision"] = finalized ? ordered_json(std::string(style::to_string(r.verdict.decision))) : ordered_json(nullptr);
    e["reviewer"] = r.reviewer;
    e["render_provenance"] = r.render_provenance;
    e["map_digest"] = r.rendered_digest;
    e["icons"] = ordered_json::object();
    for (const auto& [name, digest] : r.icons) e["icons"][name] = digest;
    e["files"] = ordered_json::object();
    for (const auto& [path, digest] : r.files) e["files"][path] = digest;
    return e;
}

[[noreturn]] void corrupt(const std::string& run_id, const std::string& what) {
    throw Error(ErrorKind::CorruptSession, "run " + run_id + ": " + what);
}

std::map<std::string, std::string> digest_map(const json& doc, const std::string& run_id, const char* what) {
    std::map<std::string, std::string> out;
    if (!doc.is_object()) corrupt(run_id, std::string(what) + " is not an object");
    for (const auto& [k, v] : doc.items()) {
        if (!v.is_string()) corrupt(run_id, std::string(what) + " entry " + k + " is not a digest");
        out[k] = v.get<std::string>();
    }
    return out;
}

/// Reads every listed file and checks it against its digest.
std::map<std::string, util::Bytes> verified(const fs::path& base, const std::map<std::string, std::string>& files,
                                            const std::string& run_id) {
    std::map<std::string, util::Bytes> out;
    for (const auto& [rel, digest] : files) {
        const fs::path p = base / rel;
        if (rel.find("..") != std::string::npos) corrupt(run_id, "file path " + rel + " escapes the run directory");
        if (!fs::is_regular_file(p)) corrupt(run_id, "missing file " + rel);
        auto bytes = util::read_bytes(p);
        if (util::sha256_hex(bytes) != digest) corrupt(run_id, "digest mismatch for " + rel);
        out.emplace(rel, std::move(bytes));
    }
    return out;
}

std::string text_of(const util::Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace

ordered_json caption_to_json(const prompt::ImageCaption& caption) {
    ordered_json out;
    out["content"] = caption.content;
    out["color"] = caption.color;
    out["theme_design"] = caption.theme_design;
    out["color_swatches"] = ordered_json::array();
    for (const auto& c : caption.color_swatches) out["color_swatches"].push_back(c.hex());
    out["sectioning_incomplete"] = caption.sectioning_incomplete;
    out["raw"] = caption.raw;
    return out;
}

prompt::ImageCaption caption_from_json(const json& doc) {
    prompt::ImageCaption c;
    try {
        c.content = doc.at("content").get<std::string>();
        c.color = doc.at("color").get<std::string>();
        c.theme_design = doc.at("theme_design").get<std::string>();
        for (const auto& s : doc.at("color_swatches")) c.color_swatches.push_back(style::Color::parse(s.get<std::string>()));
        c.sectioning_incomplete = doc.at("sectioning_incomplete").get<bool>();
        c.raw = doc.at("raw").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaViolation, std::string("caption: ") + e.what());
    }
    return c;
}

ordered_json transcript_to_json(const std::vector<llm::ChatMessage>& transcript, const util::Bytes& inspiration) {
    ordered_json out = ordered_json::array();
    for (const auto& m : transcript) {
        ordered_json e;
        e["author"] = std::string(llm::to_string(m.author));
        e["text"] = m.text;
        e["images"] = ordered_json::array();
        for (const auto& img : m.images) {
            if (img.bytes != inspiration) {
                throw Error(ErrorKind::InvalidArgument, "only the inspiration image can be stored in a transcript");
            }
            e["images"].push_back(kInspirationRef);
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<llm::ChatMessage> transcript_from_json(const json& doc, const util::Bytes& inspiration) {
    std::vector<llm::ChatMessage> out;
    try {
        for (const auto& e : doc) {
            llm::ChatMessage m;
            const std::string author = e.at("author").get<std::string>();
            if (author == "system") {
                m.author = llm::Author::system;
            } else if (author == "user") {
                m.author = llm::Author::user;
            } else if (author == "assistant") {
                m.author = llm::Author::assistant;
            } else {
                throw Error(ErrorKind::SchemaViolation, "unknown author " + author);
            }
            m.text = e.at("text").get<std::string>();
            for (const auto& ref : e.at("images")) {
                if (ref != kInspirationRef) throw Error(ErrorKind::SchemaViolation, "unknown image reference " + ref.dump());
                m.images.push_back({inspiration, "image/png"});
            }
            out.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaViolation, std::string("transcript: ") + e.what());
    }
    return out;
}

void persist_session(const fs::path& runs_dir, const RunSession& session) {
    ordered_json doc;
    doc["format"] = kFormat;
    doc["run_id"] = session.run_id;
    doc["terminated_by"] =
        session.terminated_by ? ordered_json(std::string(to_string(*session.terminated_by))) : ordered_json(nullptr);
    doc["error"] = session.error;
    doc["dataset_digest"] = session.dataset_digest;
    doc["template_hashes"] = ordered_json::object();
    for (const auto& [k, v] : session.template_hashes) doc["template_hashes"][k] = v;
    doc["files"] = ordered_json::object();
    for (const auto& [k, v] : session.files) doc["files"][k] = v;
    doc["iterations"] = ordered_json::array();
    for (const auto& r : session.iterations) doc["iterations"].push_back(record_entry(r, true));
    doc["awaiting"] = session.awaiting ? record_entry(*session.awaiting, false) : ordered_json(nullptr);
    util::write_atomic(runs_dir / session.run_id / "session.json", doc.dump(2) + "\n");
}

RunSession load_session(const fs::path& runs_dir, const std::string& run_id) {
    const fs::path dir = runs_dir / run_id;
    const fs::path index_path = dir / "session.json";
    if (!fs::is_regular_file(index_path)) throw Error(ErrorKind::IoError, "no session " + run_id + " under " + runs_dir.string());
    json index;
    try {
        index = json::parse(util::read_text(index_path));
    } catch (const json::exception& e) {
        corrupt(run_id, std::string("session.json: ") + e.what());
    }

    RunSession s;
    try {
        if (index.value("format", "") != kFormat) corrupt(run_id, "unknown session format");
        s.run_id = index.at("run_id").get<std::string>();
        if (s.run_id != run_id) corrupt(run_id, "session.json names run " + s.run_id);
        if (!index.at("terminated_by").is_null()) {
            const std::string t = index["terminated_by"].get<std::string>();
            if (t == "accept") {
                s.terminated_by = Termination::accept;
            } else if (t == "cap") {
                s.terminated_by = Termination::cap;
            } else if (t == "error") {
                s.terminated_by = Termination::error;
            } else {
                corrupt(run_id, "unknown termination " + t);
            }
        }
        s.error = index.value("error", "");
        s.dataset_digest = index.at("dataset_digest").get<std::string>();
        s.template_hashes = digest_map(index.at("template_hashes"), run_id, "template_hashes");
        s.files = digest_map(index.at("files"), run_id, "files");
        const auto root = verified(dir, s.files, run_id);

        const auto need = [&](const std::string& rel) -> const util::Bytes& {
            auto it = root.find(rel);
            if (it == root.end()) corrupt(run_id, "index lacks " + rel);
            return it->second;
        };
        s.config = RunConfig::from_json(ordered_json::parse(text_of(need("config.json"))));
        s.inspiration = need("inspiration.png");
        s.manifest = style::parse_manifest(text_of(need("manifest.json")));
        if (root.contains("caption.json")) s.caption = caption_from_json(json::parse(text_of(root.at("caption.json"))));

        const auto load_record = [&](const json& entry, bool finalized) {
            IterationRecord r;
            r.index = entry.at("index").get<int>();
            r.reviewer = entry.at("reviewer").get<std::string>();
            r.render_provenance = entry.at("render_provenance").get<std::string>();
            r.rendered_digest = entry.at("map_digest").get<std::string>();
            r.icons = digest_map(entry.at("icons"), run_id, "icons");
            r.files = digest_map(entry.at("files"), run_id, "iteration files");
            const auto files = verified(dir / "iterations" / std::to_string(r.index), r.files, run_id);
            const auto file = [&](const std::string& rel) -> std::string {
                auto it = files.find(rel);
                if (it == files.end()) corrupt(run_id, "iteration " + std::to_string(r.index) + " lacks " + rel);
                return text_of(it->second);
            };
            r.stylesheet = style::parse_stylesheet(file("stylesheet.json"));
            r.compiled = compiler::CompiledStyle::from_document(style::parse_json(file("style.json")));
            r.metrics = metrics::metrics_from_json(json::parse(file("metrics.json")));
            r.designer_transcript = transcript_from_json(json::parse(file("designer.json")), s.inspiration);
            if (r.files.at("map.png") != r.rendered_digest) corrupt(run_id, "map digest disagrees with its file");
            if (finalized) r.verdict = style::verdict_from_json(style::parse_json(file("review.json")));
            return r;
        };
        for (const auto& entry : index.at("iterations")) {
            s.iterations.push_back(load_record(entry, true));
            if (s.iterations.back().index != static_cast<int>(s.iterations.size()) - 1) {
                corrupt(run_id, "iterations are not numbered contiguously from 0");
            }
        }
        if (!index.at("awaiting").is_null()) s.awaiting = load_record(index["awaiting"], false);
    } catch (const json::exception& e) {
        corrupt(run_id, std::string("session.json: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::CorruptSession || e.kind() == ErrorKind::IoError) throw;
        corrupt(run_id, e.what());
    }
    return s;
}

std::vector<std::string> list_sessions(const fs::path& runs_dir) {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(runs_dir, ec)) {
        if (entry.is_directory() && fs::is_regular_file(entry.path() / "session.json")) {
            ids.push_back(entry.path().filename().string());
        }
    }
    if (ec) throw Error(ErrorKind::IoError, "cannot list " + runs_dir.string() + ": " + ec.message());
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace cartoforge::orchestrator
