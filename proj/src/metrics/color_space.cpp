#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cartoforge/metrics/metrics.hpp"

namespace cartoforge::metrics {

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) noexcept {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double max = std::max({r, g, b});
    const double min = std::min({r, g, b});
    const double delta = max - min;
    Hsv out;
    out.v = max;
    out.s = max > 0 ? delta / max : 0;
    if (delta <= 0) return out;
    double h;
    if (max == r) {
        h = 60.0 * ((g - b) / delta);
    } else if (max == g) {
        h = 60.0 * ((b - r) / delta + 2.0);
    } else {
        h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
    return out;
}

Hsv rgb_to_hsv(const style::Color& c) noexcept {
    const auto [r, g, b] = c.rgb();
    return rgb_to_hsv(r, g, b);
}

Rgba hsv_to_rgb(const Hsv& hsv) noexcept {
    const double c = hsv.v * hsv.s;
    const double hp = std::fmod(hsv.h, 360.0) / 60.0;
    const double x = c * (1 - std::fabs(std::fmod(hp, 2.0) - 1));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const double m = hsv.v - c;
    auto channel = [m](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround((v + m) * 255.0), 0L, 255L));
    };
    return {channel(r), channel(g), channel(b), 255};
}

double cone_distance(const style::Color& a, const style::Color& b) noexcept {
    auto cone = [](const style::Color& c) {
        const Hsv hsv = rgb_to_hsv(c);
        const double rad = hsv.h * std::numbers::pi / 180.0;
        return std::array<double, 3>{hsv.s * hsv.v * std::cos(rad), hsv.s * hsv.v * std::sin(rad), hsv.v};
    };
    const auto p = cone(a);
    const auto q = cone(b);
    const double d = std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
    return d / 2.0;
}

double contrast_ratio(const style::Color& a, const style::Color& b) noexcept {
    auto luminance = [](const style::Color& c) {
        auto lin = [](std::uint8_t v) {
            const double s = v / 255.0;
            return s <= 0.03928 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
        };
        const auto [r, g, b] = c.rgb();
        return 0.2126 * lin(r) + 0.7152 * lin(g) + 0.0722 * lin(b);
    };
    const double la = luminance(a);
    const double lb = luminance(b);
    return (std::max(la, lb) + 0.05) / (std::min(la, lb) + 0.05);
}

}  // namespace cartoforge::metrics
