#include "cartoforge/style/color.hpp"

#include <cctype>
#include <cmath>

#include "cartoforge/error.hpp"

namespace cartoforge::style {

namespace {

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::optional<std::string> canonical(std::string_view text) noexcept {
    if (text.empty() || text.front() != '#') return std::nullopt;
    const std::string_view digits = text.substr(1);
    if (digits.size() != 3 && digits.size() != 6) return std::nullopt;
    std::string out = "#";
    for (char c : digits) {
        if (hex_value(c) < 0) return std::nullopt;
        const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(lower);
        if (digits.size() == 3) out.push_back(lower);
    }
    return out;
}

}  // namespace

Color Color::parse(std::string_view text) {
    auto c = canonical(text);
    if (!c) {
        throw Error(ErrorKind::SchemaViolation, "not a hex color: \"" + std::string(text) + "\"");
    }
    return Color(std::move(*c));
}

std::optional<Color> Color::try_parse(std::string_view text) noexcept {
    auto c = canonical(text);
    if (!c) return std::nullopt;
    return Color(std::move(*c));
}

Color Color::from_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = "#";
    for (std::uint8_t v : {r, g, b}) {
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0x0f]);
    }
    return Color(std::move(out));
}

std::array<std::uint8_t, 3> Color::rgb() const noexcept {
    std::array<std::uint8_t, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = static_cast<std::uint8_t>(hex_value(value_[1 + 2 * i]) * 16 + hex_value(value_[2 + 2 * i]));
    }
    return out;
}

std::string normalize_color(std::string_view text) {
    return Color::parse(text).hex();
}

Opacity Opacity::of(double value) {
    if (std::isnan(value) || value < 0.0 || value > 1.0) {
        throw Error(ErrorKind::SchemaViolation, "opacity must lie in [0, 1], got " + std::to_string(value));
    }
    return Opacity(value);
}

}  // namespace cartoforge::style
