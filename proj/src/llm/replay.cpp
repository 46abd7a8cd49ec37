#include <fstream>

#include "cartoforge/error.hpp"
#include "cartoforge/llm/gateway.hpp"
#include "cartoforge/util/fs.hpp"

namespace cartoforge::llm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string replay_key(const std::string& role_id, int turn, const std::string& digest) {
    return role_id + "#" + std::to_string(turn) + "#" + digest;
}

}  // namespace

ReplayProvider::ReplayProvider(const std::filesystem::path& fixture) : dir_(fixture.parent_path()) {
    std::ifstream in(fixture);
    if (!in) throw Error(ErrorKind::IoError, "cannot open replay fixture " + fixture.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json record = json::parse(line);
            const std::string key = replay_key(record.at("role_id").get<std::string>(), record.at("turn").get<int>(),
                                               record.at("request_digest").get<std::string>());
            by_key_[key].push_back(std::move(record));
            ++records_;
        } catch (const json::exception& e) {
            throw Error(ErrorKind::MalformedJson,
                        fixture.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

const json& ReplayProvider::next(const std::string& role_id, int turn, const std::string& digest) {
    const std::string key = replay_key(role_id, turn, digest);
    std::lock_guard lock(mutex_);
    const auto it = by_key_.find(key);
    if (it == by_key_.end()) {
        throw Error(ErrorKind::ReplayMiss, "no recorded reply for role " + role_id + ", turn " + std::to_string(turn) +
                                               ", request " + digest);
    }
    std::size_t& n = served_[key];
    const json& record = it->second[std::min(n, it->second.size() - 1)];
    ++n;
    return record;
}

std::string ReplayProvider::complete(const ChatRequest& request) {
    const json& record = next(request.role_id, request.turn, request.digest);
    if (!record.contains("response") || !record["response"].is_string()) {
        throw Error(ErrorKind::ReplayMiss, "recorded reply for " + request.role_id + " is not text");
    }
    return record["response"].get<std::string>();
}

util::Bytes ReplayProvider::generate(const ImageRequest& request) {
    const json& record = next(request.role_id, request.turn, request.digest);
    if (!record.contains("response_image") || !record["response_image"].is_string()) {
        throw Error(ErrorKind::ReplayMiss, "recorded reply for " + request.role_id + " is not an image");
    }
    return util::read_bytes(dir_ / record["response_image"].get<std::string>());
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, std::filesystem::path fixture,
                                     ordered_json params, std::string model)
    : inner_(std::move(inner)), fixture_(std::move(fixture)), params_(std::move(params)), model_(std::move(model)) {
    if (!fixture_.parent_path().empty()) std::filesystem::create_directories(fixture_.parent_path());
}

void RecordingProvider::append(ordered_json record) {
    record["model"] = model_;
    record["params"] = params_;
    std::lock_guard lock(mutex_);
    std::ofstream out(fixture_, std::ios::app | std::ios::binary);
    out << record.dump() << '\n';
    if (!out) throw Error(ErrorKind::IoError, "cannot append to fixture " + fixture_.string());
}

std::string RecordingProvider::complete(const ChatRequest& request) {
    std::string reply = inner_->complete(request);
    ordered_json record;
    record["role_id"] = request.role_id;
    record["turn"] = request.turn;
    record["request_digest"] = request.digest;
    record["response"] = reply;
    append(std::move(record));
    return reply;
}

util::Bytes RecordingProvider::generate(const ImageRequest& request) {
    util::Bytes bytes = inner_->generate(request);
    const std::string name = util::sha256_hex(bytes) + ".png";
    util::write_atomic(fixture_.parent_path() / name, bytes);
    ordered_json record;
    record["role_id"] = request.role_id;
    record["turn"] = request.turn;
    record["request_digest"] = request.digest;
    record["response_image"] = name;
    append(std::move(record));
    return bytes;
}

util::Bytes FunctionProvider::generate(const ImageRequest& request) {
    if (!image_) throw Error(ErrorKind::InvalidArgument, "this provider does not generate images");
    return image_(request);
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config) {
    config.validate();
    std::shared_ptr<Provider> p;
    if (config.kind == ProviderKind::replay) {
        p = std::make_shared<ReplayProvider>(config.fixture_path);
    } else {
        p = std::make_shared<RemoteProvider>(config);
    }
    if (!config.record_path.empty()) {
        p = std::make_shared<RecordingProvider>(p, config.record_path, config.params(), config.model);
    }
    return p;
}

}  // namespace cartoforge::llm
