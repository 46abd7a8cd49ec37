#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "cartoforge/error.hpp"
#include "cartoforge/prompt/prompt_kit.hpp"
#include "cartoforge/style/json_io.hpp"

namespace cartoforge::prompt {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// End (exclusive) of the balanced object starting at `open`, or npos.
std::size_t balanced_end(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

std::optional<std::string> first_object(std::string_view text) {
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        const auto end = balanced_end(text, pos);
        if (end != std::string_view::npos) {
            const auto candidate = text.substr(pos, end - pos);
            if (nlohmann::json::accept(candidate)) return std::string(candidate);
        }
        ++pos;
    }
    return std::nullopt;
}

std::vector<std::string_view> fenced_blocks(std::string_view text) {
    std::vector<std::string_view> blocks;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        auto body = text.find('\n', open + 3);
        if (body == std::string_view::npos) break;
        ++body;
        const auto close = text.find("```", body);
        if (close == std::string_view::npos) break;
        blocks.push_back(text.substr(body, close - body));
        pos = close + 3;
    }
    return blocks;
}

enum class Section { none, content, color, theme_design };

struct Heading {
    Section section;
    std::string inline_text;
};

std::optional<Heading> heading_of(std::string_view line) {
    std::string_view s = trim(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '-' || s.front() == '*' || s.front() == '>' ||
                          std::isspace(static_cast<unsigned char>(s.front())))) {
        s.remove_prefix(1);
    }
    std::string lowered(s);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const std::pair<std::string_view, Section> names[] = {
        {"theme & design", Section::theme_design}, {"theme and design", Section::theme_design},
        {"theme/design", Section::theme_design},   {"content", Section::content},
        {"colour", Section::color},                {"color", Section::color},
    };
    for (const auto& [name, section] : names) {
        if (!std::string_view(lowered).starts_with(name)) continue;
        std::string_view rest = s.substr(name.size());
        while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.remove_prefix(1);
        if (rest.empty()) return Heading{section, {}};
        if (rest.front() != ':') return std::nullopt;
        rest.remove_prefix(1);
        while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.remove_prefix(1);
        return Heading{section, std::string(trim(rest))};
    }
    return std::nullopt;
}

bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<style::Color> swatches_in(std::string_view text) {
    std::vector<style::Color> out;
    for (std::size_t i = 0; i + 7 <= text.size(); ++i) {
        if (text[i] != '#') continue;
        if (!std::all_of(text.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                         text.begin() + static_cast<std::ptrdiff_t>(i) + 7, is_hex)) {
            continue;
        }
        if (i + 7 < text.size() && is_hex(text[i + 7])) continue;
        auto c = style::Color::parse(text.substr(i, 7));
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::string extract_json_block(std::string_view reply) {
    for (const auto block : fenced_blocks(reply)) {
        if (auto obj = first_object(block)) return *obj;
    }
    if (auto obj = first_object(reply)) return *obj;
    throw Error(ErrorKind::NoJsonFound, "reply contains no JSON object");
}

ImageCaption parse_appreciator_reply(std::string_view reply) {
    if (trim(reply).empty()) throw Error(ErrorKind::EmptyReply, "appreciator reply is empty");

    ImageCaption caption;
    caption.raw = std::string(reply);
    std::string sections[4];
    bool seen[4] = {false, false, false, false};
    Section current = Section::none;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        auto nl = reply.find('\n', pos);
        if (nl == std::string_view::npos) nl = reply.size();
        const auto line = reply.substr(pos, nl - pos);
        pos = nl + 1;
        if (auto h = heading_of(line); h && !seen[static_cast<int>(h->section)]) {
            current = h->section;
            seen[static_cast<int>(current)] = true;
            if (!h->inline_text.empty()) sections[static_cast<int>(current)] += h->inline_text + "\n";
            continue;
        }
        sections[static_cast<int>(current)] += std::string(line) + "\n";
    }

    const bool any_heading = seen[1] || seen[2] || seen[3];
    if (!any_heading) {
        caption.content = std::string(trim(reply));
        caption.sectioning_incomplete = true;
        return caption;
    }
    caption.content = std::string(trim(sections[static_cast<int>(Section::content)]));
    caption.color = std::string(trim(sections[static_cast<int>(Section::color)]));
    caption.theme_design = std::string(trim(sections[static_cast<int>(Section::theme_design)]));
    caption.sectioning_incomplete = !(seen[1] && seen[2] && seen[3]);
    caption.color_swatches = swatches_in(caption.color);
    return caption;
}

style::ReviewVerdict parse_reviewer_reply(std::string_view reply) {
    if (trim(reply).empty()) throw Error(ErrorKind::EmptyReply, "reviewer reply is empty");
    return style::verdict_from_json(style::parse_json(extract_json_block(reply)));
}

}  // namespace cartoforge::prompt
