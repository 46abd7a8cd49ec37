#include <map>

#include "cartoforge/error.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/testkit/scripted_model.hpp"

namespace cartoforge::testkit {

std::vector<llm::ChatRequest> ScriptedModel::requests(const std::string& role_id) const {
    std::vector<llm::ChatRequest> out;
    for (const auto& r : chat_log)
        if (r.role_id == role_id) out.push_back(r);
    return out;
}

std::shared_ptr<llm::Provider> scripted_provider(std::shared_ptr<ScriptedModel> model) {
    auto served = std::make_shared<std::map<std::string, std::size_t>>();
    auto chat = [model, served](const llm::ChatRequest& r) -> std::string {
        std::lock_guard lock(model->mutex);
        model->chat_log.push_back(r);
        const std::vector<std::string>* replies = nullptr;
        if (r.role_id == "appreciator") replies = &model->appreciator;
        if (r.role_id == "style_designer") replies = &model->designer;
        if (r.role_id == "reviewer") replies = &model->reviewer;
        if (r.role_id == "file_implementer") replies = &model->implementer;
        if (!replies || replies->empty()) throw Error(ErrorKind::ReplayMiss, "no scripted reply for " + r.role_id);
        auto& n = (*served)[r.role_id];
        const auto& reply = (*replies)[std::min(n, replies->size() - 1)];
        ++n;
        return reply;
    };
    auto image = [model](const llm::ImageRequest& r) -> util::Bytes {
        std::lock_guard lock(model->mutex);
        model->image_log.push_back(r);
        if (model->image) return model->image(r);
        const auto d = util::sha256_hex(r.prompt);
        const auto byte = [&](int i) { return static_cast<std::uint8_t>(std::stoi(d.substr(2 * i, 2), nullptr, 16)); };
        return encode_png(Image(r.size_px, r.size_px, {byte(0), byte(1), byte(2), 255}));
    };
    return std::make_shared<llm::FunctionProvider>(chat, image);
}

std::string request_text(const llm::ChatRequest& request) {
    std::string out;
    for (const auto& m : request.messages) {
        const auto& content = m["content"];
        if (content.is_string()) {
            out += content.get<std::string>();
        } else {
            for (const auto& part : content)
                if (part.value("type", "") == "text") out += part.value("text", "");
        }
        out += '\n';
    }
    return out;
}

}  // namespace cartoforge::testkit
