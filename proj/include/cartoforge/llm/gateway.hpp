#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cartoforge/util/digest.hpp"

namespace cartoforge::llm {

enum class Author { system, user, assistant };

std::string_view to_string(Author author) noexcept;

struct ImageAttachment {
    util::Bytes bytes;
    std::string media_type = "image/png";

    friend bool operator==(const ImageAttachment&, const ImageAttachment&) = default;
};

struct ChatMessage {
    Author author = Author::user;
    std::string text;
    std::vector<ImageAttachment> images;

    static ChatMessage system(std::string text) { return {Author::system, std::move(text), {}}; }
    static ChatMessage user(std::string text, std::vector<ImageAttachment> images = {}) {
        return {Author::user, std::move(text), std::move(images)};
    }

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

enum class ProviderKind { remote_chat, remote_image, replay };

std::string_view to_string(ProviderKind kind) noexcept;

struct ProviderConfig {
    ProviderKind kind = ProviderKind::replay;
    /// Full URL of the chat-completions or image-generation endpoint.
    std::string endpoint;
    std::string model;
    /// Name of the environment variable holding the API key.
    std::string credential_env = "CARTOFORGE_API_KEY";
    double timeout_seconds = 120;
    int max_retries = 3;
    double backoff_seconds = 1.0;
    /// replay: the JSON-lines fixture to answer from.
    std::string fixture_path;
    /// When set, every call is also appended to this fixture.
    std::string record_path;
    int max_image_edge = 1024;
    std::optional<double> temperature;

    /// Throws Error{InvalidArgument}.
    void validate() const;
    nlohmann::ordered_json params() const;

    static ProviderConfig from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;

    friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

/// A request as the provider sees it. `digest` covers role, turn and the
/// wire messages; model, sampling parameters and credentials are excluded.
struct ChatRequest {
    std::string role_id;
    int turn = 0;
    nlohmann::ordered_json messages;
    std::string digest;
};

struct ImageRequest {
    std::string role_id = "image";
    int turn = 1;
    std::string prompt;
    int size_px = 0;
    std::string digest;
};

struct CallLogEntry {
    std::string role_id;
    int turn = 0;
    int attempts = 0;
    int status = 0;  ///< last HTTP status, 0 when no response arrived
};

class Provider {
public:
    virtual ~Provider() = default;
    /// Returns the assistant's reply text.
    virtual std::string complete(const ChatRequest& request) = 0;
    /// Returns encoded image bytes.
    virtual util::Bytes generate(const ImageRequest& request) = 0;
    virtual const ProviderConfig* config() const { return nullptr; }
};

/// OpenAI-compatible HTTP provider with bounded retries.
class RemoteProvider final : public Provider {
public:
    explicit RemoteProvider(ProviderConfig config);
    std::string complete(const ChatRequest& request) override;
    util::Bytes generate(const ImageRequest& request) override;
    const ProviderConfig* config() const override { return &config_; }
    std::vector<CallLogEntry> call_log() const;

private:
    std::string post(const std::string& role_id, int turn, const nlohmann::ordered_json& body);

    ProviderConfig config_;
    mutable std::mutex mutex_;
    std::vector<CallLogEntry> log_;
};

/// Answers from a recorded fixture. Records sharing a key answer in record
/// order; once exhausted, the last one repeats.
class ReplayProvider final : public Provider {
public:
    explicit ReplayProvider(const std::filesystem::path& fixture);
    std::string complete(const ChatRequest& request) override;
    util::Bytes generate(const ImageRequest& request) override;
    std::size_t record_count() const noexcept { return records_; }

private:
    const nlohmann::json& next(const std::string& role_id, int turn, const std::string& digest);

    std::filesystem::path dir_;
    std::size_t records_ = 0;
    std::mutex mutex_;
    std::map<std::string, std::vector<nlohmann::json>> by_key_;
    std::map<std::string, std::size_t> served_;
};

/// Forwards to `inner` and appends one JSON-lines record per call to
/// `fixture`; generated images go next to it as `<sha256>.png`.
class RecordingProvider final : public Provider {
public:
    RecordingProvider(std::shared_ptr<Provider> inner, std::filesystem::path fixture,
                      nlohmann::ordered_json params = nlohmann::ordered_json::object(), std::string model = {});
    std::string complete(const ChatRequest& request) override;
    util::Bytes generate(const ImageRequest& request) override;
    const ProviderConfig* config() const override { return inner_->config(); }

private:
    void append(nlohmann::ordered_json record);

    std::shared_ptr<Provider> inner_;
    std::filesystem::path fixture_;
    nlohmann::ordered_json params_;
    std::string model_;
    std::mutex mutex_;
};

/// In-process provider driven by callbacks; used by tools and tests.
class FunctionProvider final : public Provider {
public:
    using ChatFn = std::function<std::string(const ChatRequest&)>;
    using ImageFn = std::function<util::Bytes(const ImageRequest&)>;

    explicit FunctionProvider(ChatFn chat, ImageFn image = {}) : chat_(std::move(chat)), image_(std::move(image)) {}
    std::string complete(const ChatRequest& request) override { return chat_(request); }
    util::Bytes generate(const ImageRequest& request) override;

private:
    ChatFn chat_;
    ImageFn image_;
};

/// Remote or replay provider per `config.kind`, wrapped in a recorder when
/// `config.record_path` is set.
std::shared_ptr<Provider> make_provider(const ProviderConfig& config);

struct ChatSession {
    std::string session_id;  ///< "<role_id>/<generation>"
    std::string role_id;
    int generation = 1;
    std::vector<ChatMessage> transcript;
    std::shared_ptr<Provider> provider;
    int max_image_edge = 1024;

    static ChatSession open(std::string role_id, std::string system_prompt, std::shared_ptr<Provider> provider,
                            int max_image_edge = 1024);
    int user_turns() const noexcept;
};

/// OpenAI chat-completions `messages` array; images become base64 data URLs,
/// downscaled to `max_image_edge`.
nlohmann::ordered_json wire_messages(const std::vector<ChatMessage>& transcript, int max_image_edge);

std::string request_digest(std::string_view role_id, int turn, const nlohmann::ordered_json& messages);
std::string image_request_digest(std::string_view prompt, int size_px);

/// Appends `message` (author user) and the reply. On failure the transcript
/// is left unchanged. Throws Error{ProviderTimeout}, Error{ProviderHttpError}
/// or Error{ReplayMiss}.
ChatMessage chat(ChatSession& session, ChatMessage message);

/// Same role, same system prompt, nothing else; next generation id.
ChatSession reset_session(const ChatSession& session);

/// Square PNG of side `size_px`. Error{InvalidArgument} for size_px < 1.
util::Bytes generate_image(Provider& provider, const std::string& prompt, int size_px);
util::Bytes generate_image(const ProviderConfig& config, const std::string& prompt, int size_px);

}  // namespace cartoforge::llm
