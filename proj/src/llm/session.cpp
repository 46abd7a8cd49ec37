#include "cartoforge/error.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/llm/gateway.hpp"

namespace cartoforge::llm {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Author author) noexcept {
    switch (author) {
        case Author::system: return "system";
        case Author::user: return "user";
        case Author::assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(ProviderKind kind) noexcept {
    switch (kind) {
        case ProviderKind::remote_chat: return "remote-chat";
        case ProviderKind::remote_image: return "remote-image";
        case ProviderKind::replay: return "replay";
    }
    return "replay";
}

void ProviderConfig::validate() const {
    if (kind == ProviderKind::replay && fixture_path.empty()) {
        throw Error(ErrorKind::InvalidArgument, "replay providers need a fixture_path");
    }
    if (kind != ProviderKind::replay && endpoint.empty()) {
        throw Error(ErrorKind::InvalidArgument, "remote providers need an endpoint");
    }
    if (max_retries < 1) throw Error(ErrorKind::InvalidArgument, "max_retries must be at least 1");
    if (timeout_seconds <= 0) throw Error(ErrorKind::InvalidArgument, "timeout_seconds must be positive");
    if (max_image_edge < 1) throw Error(ErrorKind::InvalidArgument, "max_image_edge must be positive");
}

ordered_json ProviderConfig::params() const {
    ordered_json p = ordered_json::object();
    if (temperature) p["temperature"] = *temperature;
    return p;
}

ProviderConfig ProviderConfig::from_json(const json& doc) {
    ProviderConfig c;
    try {
        const std::string kind = doc.value("kind", "replay");
        if (kind == "remote-chat") {
            c.kind = ProviderKind::remote_chat;
        } else if (kind == "remote-image") {
            c.kind = ProviderKind::remote_image;
        } else if (kind == "replay") {
            c.kind = ProviderKind::replay;
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown provider kind \"" + kind + "\"");
        }
        c.endpoint = doc.value("endpoint", c.endpoint);
        c.model = doc.value("model", c.model);
        c.credential_env = doc.value("credential_env", c.credential_env);
        c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
        c.max_retries = doc.value("max_retries", c.max_retries);
        c.backoff_seconds = doc.value("backoff_seconds", c.backoff_seconds);
        c.fixture_path = doc.value("fixture_path", c.fixture_path);
        c.record_path = doc.value("record_path", c.record_path);
        c.max_image_edge = doc.value("max_image_edge", c.max_image_edge);
        if (doc.contains("temperature") && !doc["temperature"].is_null()) c.temperature = doc["temperature"].get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("provider config: ") + e.what());
    }
    c.validate();
    return c;
}

ordered_json ProviderConfig::to_json() const {
    ordered_json out;
    out["kind"] = std::string(to_string(kind));
    out["endpoint"] = endpoint;
    out["model"] = model;
    out["credential_env"] = credential_env;
    out["timeout_seconds"] = timeout_seconds;
    out["max_retries"] = max_retries;
    out["backoff_seconds"] = backoff_seconds;
    out["fixture_path"] = fixture_path;
    out["record_path"] = record_path;
    out["max_image_edge"] = max_image_edge;
    out["temperature"] = temperature ? ordered_json(*temperature) : ordered_json(nullptr);
    return out;
}

ChatSession ChatSession::open(std::string role_id, std::string system_prompt, std::shared_ptr<Provider> provider,
                              int max_image_edge) {
    ChatSession s;
    s.role_id = std::move(role_id);
    s.session_id = s.role_id + "/1";
    s.transcript.push_back(ChatMessage::system(std::move(system_prompt)));
    s.provider = std::move(provider);
    s.max_image_edge = max_image_edge;
    return s;
}

int ChatSession::user_turns() const noexcept {
    int n = 0;
    for (const auto& m : transcript) n += m.author == Author::user;
    return n;
}

namespace {

ImageAttachment bounded(const ImageAttachment& img, int max_edge) {
    const Image decoded = decode_image(img.bytes);
    if (decoded.width() <= max_edge && decoded.height() <= max_edge) return img;
    return {encode_png(fit_within(decoded, max_edge)), "image/png"};
}

}  // namespace

ordered_json wire_messages(const std::vector<ChatMessage>& transcript, int max_image_edge) {
    ordered_json out = ordered_json::array();
    for (const auto& m : transcript) {
        ordered_json msg;
        msg["role"] = std::string(to_string(m.author));
        if (m.images.empty()) {
            msg["content"] = m.text;
        } else {
            ordered_json parts = ordered_json::array();
            parts.push_back({{"type", "text"}, {"text", m.text}});
            for (const auto& img : m.images) {
                const auto sent = bounded(img, max_image_edge);
                parts.push_back({{"type", "image_url"},
                                 {"image_url", {{"url", "data:" + sent.media_type + ";base64," +
                                                            util::base64_encode(sent.bytes)}}}});
            }
            msg["content"] = std::move(parts);
        }
        out.push_back(std::move(msg));
    }
    return out;
}

std::string request_digest(std::string_view role_id, int turn, const ordered_json& messages) {
    ordered_json canonical;
    canonical["role_id"] = std::string(role_id);
    canonical["turn"] = turn;
    canonical["messages"] = messages;
    return util::sha256_hex(canonical.dump());
}

std::string image_request_digest(std::string_view prompt, int size_px) {
    ordered_json canonical;
    canonical["prompt"] = std::string(prompt);
    canonical["size_px"] = size_px;
    return util::sha256_hex(canonical.dump());
}

ChatMessage chat(ChatSession& session, ChatMessage message) {
    if (message.author != Author::user) throw Error(ErrorKind::InvalidArgument, "chat expects a user message");
    if (!session.provider) throw Error(ErrorKind::InvalidArgument, "session has no provider");
    if (session.transcript.empty() || session.transcript.front().author != Author::system) {
        throw Error(ErrorKind::InvalidArgument, "session transcript must start with its system message");
    }
    std::vector<ChatMessage> pending = session.transcript;
    pending.push_back(std::move(message));
    ChatRequest req;
    req.role_id = session.role_id;
    req.turn = session.user_turns() + 1;
    req.messages = wire_messages(pending, session.max_image_edge);
    req.digest = request_digest(req.role_id, req.turn, req.messages);
    ChatMessage reply{Author::assistant, session.provider->complete(req), {}};
    pending.push_back(reply);
    session.transcript = std::move(pending);
    return reply;
}

ChatSession reset_session(const ChatSession& session) {
    ChatSession fresh;
    fresh.role_id = session.role_id;
    fresh.generation = session.generation + 1;
    fresh.session_id = fresh.role_id + "/" + std::to_string(fresh.generation);
    if (!session.transcript.empty() && session.transcript.front().author == Author::system) {
        fresh.transcript.push_back(session.transcript.front());
    }
    fresh.provider = session.provider;
    fresh.max_image_edge = session.max_image_edge;
    return fresh;
}

util::Bytes generate_image(Provider& provider, const std::string& prompt, int size_px) {
    if (size_px < 1) throw Error(ErrorKind::InvalidArgument, "image size must be positive");
    ImageRequest req;
    req.prompt = prompt;
    req.size_px = size_px;
    req.digest = image_request_digest(prompt, size_px);
    util::Bytes bytes = provider.generate(req);
    const Image img = decode_image(bytes);
    if (img.width() == size_px && img.height() == size_px) return bytes;
    return encode_png(resample(img, size_px, size_px));
}

util::Bytes generate_image(const ProviderConfig& config, const std::string& prompt, int size_px) {
    if (size_px < 1) throw Error(ErrorKind::InvalidArgument, "image size must be positive");
    if (config.kind == ProviderKind::remote_chat) {
        throw Error(ErrorKind::InvalidArgument, "image generation needs a remote-image or replay provider");
    }
    const auto provider = make_provider(config);
    return generate_image(*provider, prompt, size_px);
}

}  // namespace cartoforge::llm
