#pragma once

#include <span>
#include <string_view>

namespace cartoforge::prompt::detail {

struct PromptResource {
    std::string_view key;
    std::string_view text;
};

std::span<const PromptResource> prompt_resources() noexcept;

}  // namespace cartoforge::prompt::detail
