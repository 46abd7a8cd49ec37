#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cartoforge::style {

/// Canonical form: "#" followed by six lowercase hex digits. Three-digit
/// shorthand and upper/mixed case are accepted on input.
class Color {
public:
    Color() = default;

    /// Throws Error{SchemaViolation} when `text` is not a hex color.
    static Color parse(std::string_view text);
    static std::optional<Color> try_parse(std::string_view text) noexcept;
    static Color from_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b);

    const std::string& hex() const noexcept { return value_; }
    std::array<std::uint8_t, 3> rgb() const noexcept;

    friend bool operator==(const Color&, const Color&) = default;

private:
    explicit Color(std::string canonical) : value_(std::move(canonical)) {}
    std::string value_ = "#000000";
};

/// Throws Error{SchemaViolation}. Idempotent.
std::string normalize_color(std::string_view text);

class Opacity {
public:
    Opacity() = default;

    /// Throws Error{SchemaViolation} outside [0, 1] or for NaN.
    static Opacity of(double value);
    double value() const noexcept { return value_; }

    friend bool operator==(const Opacity&, const Opacity&) = default;

private:
    explicit Opacity(double v) : value_(v) {}
    double value_ = 1.0;
};

}  // namespace cartoforge::style
