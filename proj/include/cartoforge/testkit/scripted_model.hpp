#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cartoforge/llm/gateway.hpp"

namespace cartoforge::testkit {

/// Canned replies per role, served in call order (the last one repeats).
/// Every request is logged.
struct ScriptedModel {
    std::vector<std::string> appreciator;
    std::vector<std::string> designer;
    std::vector<std::string> reviewer;
    std::vector<std::string> implementer;
    /// Defaults to a flat square coloured from the prompt's digest.
    std::function<util::Bytes(const llm::ImageRequest&)> image;

    std::vector<llm::ChatRequest> chat_log;
    std::vector<llm::ImageRequest> image_log;

    /// Requests logged for one role, in order.
    std::vector<llm::ChatRequest> requests(const std::string& role_id) const;

    std::mutex mutex;
};

/// Error{ReplayMiss} for a role with no replies.
std::shared_ptr<llm::Provider> scripted_provider(std::shared_ptr<ScriptedModel> model);

/// The text of every message of a wire request, images excluded.
std::string request_text(const llm::ChatRequest& request);

}  // namespace cartoforge::testkit
