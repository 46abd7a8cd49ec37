#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "cartoforge/error.hpp"
#include "cartoforge/llm/gateway.hpp"

namespace cartoforge::llm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Url {
    std::string origin;
    std::string path;
};

Url split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(ErrorKind::InvalidArgument, "endpoint \"" + url + "\" has no scheme");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

void set_timeout(httplib::Client& cli, double seconds) {
    const auto sec = static_cast<time_t>(seconds);
    const auto usec = static_cast<time_t>((seconds - static_cast<double>(sec)) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

RemoteProvider::RemoteProvider(ProviderConfig config) : config_(std::move(config)) { config_.validate(); }

std::vector<CallLogEntry> RemoteProvider::call_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::string RemoteProvider::post(const std::string& role_id, int turn, const ordered_json& body) {
    const Url url = split_url(config_.endpoint);
    httplib::Client cli(url.origin);
    set_timeout(cli, config_.timeout_seconds);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.credential_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string payload = body.dump();

    CallLogEntry entry{role_id, turn, 0, 0};
    auto finish = [&] {
        std::lock_guard lock(mutex_);
        log_.push_back(entry);
    };
    bool timed_out = false;
    std::string last_body;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 1 && config_.backoff_seconds > 0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(config_.backoff_seconds * std::pow(2.0, attempt - 2)));
        }
        entry.attempts = attempt;
        const auto res = cli.Post(url.path, headers, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                        err == httplib::Error::ConnectionTimeout;
            last_error = httplib::to_string(err);
            entry.status = 0;
            continue;
        }
        timed_out = false;
        entry.status = res->status;
        last_body = res->body;
        if (res->status >= 200 && res->status < 300) {
            finish();
            return res->body;
        }
        if (!retryable(res->status)) break;
    }
    finish();
    if (timed_out) {
        throw Error(ErrorKind::ProviderTimeout,
                    "no reply from " + config_.endpoint + " after " + std::to_string(entry.attempts) + " attempts");
    }
    if (entry.status == 0) {
        throw Error(ErrorKind::ProviderHttpError, "request to " + config_.endpoint + " failed: " + last_error, 0,
                    last_error);
    }
    throw Error(ErrorKind::ProviderHttpError,
                "HTTP " + std::to_string(entry.status) + " from " + config_.endpoint + " after " +
                    std::to_string(entry.attempts) + " attempts",
                entry.status, last_body);
}

std::string RemoteProvider::complete(const ChatRequest& request) {
    ordered_json body;
    body["model"] = config_.model;
    body["messages"] = request.messages;
    const ordered_json params = config_.params();
    for (auto& [k, v] : params.items()) body[k] = v;
    const std::string text = post(request.role_id, request.turn, body);
    try {
        const json reply = json::parse(text);
        const json& content = reply.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        std::string joined;
        for (const auto& part : content)
            if (part.value("type", "") == "text") joined += part.value("text", "");
        return joined;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProviderHttpError, std::string("unexpected chat reply: ") + e.what(), 200, text);
    }
}

util::Bytes RemoteProvider::generate(const ImageRequest& request) {
    ordered_json body;
    body["model"] = config_.model;
    body["prompt"] = request.prompt;
    body["n"] = 1;
    body["size"] = "1024x1024";
    body["response_format"] = "b64_json";
    const std::string text = post(request.role_id, request.turn, body);
    try {
        const json reply = json::parse(text);
        return util::base64_decode(reply.at("data").at(0).at("b64_json").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ProviderHttpError, std::string("unexpected image reply: ") + e.what(), 200, text);
    }
}

}  // namespace cartoforge::llm
