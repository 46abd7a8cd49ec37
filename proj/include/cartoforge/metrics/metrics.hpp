#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cartoforge/image.hpp"
#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::metrics {

struct Hsv {
    double h = 0;  ///< degrees, [0, 360)
    double s = 0;
    double v = 0;
};

/// Hexcone conversion; h is 0 for grays.
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;
Hsv rgb_to_hsv(const style::Color& c) noexcept;
/// Inverse of rgb_to_hsv, rounded to the nearest channel value.
Rgba hsv_to_rgb(const Hsv& hsv) noexcept;

enum class HistogramMode { joint, marginal };

struct ColorHistogram {
    int bins = 0;
    HistogramMode mode = HistogramMode::joint;
    /// joint: B^3 cells at (h*B + s)*B + v. marginal: h, s, v blocks of B.
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    std::string digest() const;
    friend bool operator==(const ColorHistogram&, const ColorHistogram&) = default;
};

/// Bin index of one channel value in [0, 1], upper edge clamped.
int bin_of(double unit_value, int bins) noexcept;

/// Fully transparent pixels are skipped. Throws Error{EmptyImage} when no
/// pixel counts, Error{InvalidArgument} for bins < 2.
ColorHistogram histogram(const Image& image, int bins, HistogramMode mode = HistogramMode::joint);

/// Throws Error{BinMismatch} or Error{ZeroHistogram}.
double cosine_similarity(const ColorHistogram& a, const ColorHistogram& b);

struct LintOptions {
    double tau = 0.08;
    double min_contrast = 1.5;

    friend bool operator==(const LintOptions&, const LintOptions&) = default;
};

struct LintWarning {
    std::string kind;  ///< "distinctness" or "label-contrast"
    std::vector<std::string> elements;
    double value = 0;
    std::string message;

    friend bool operator==(const LintWarning&, const LintWarning&) = default;
};

/// Cone coordinates (s v cos h, s v sin h, v), distance halved into [0, 1].
double cone_distance(const style::Color& a, const style::Color& b) noexcept;
/// WCAG relative-luminance contrast ratio, in [1, 21].
double contrast_ratio(const style::Color& a, const style::Color& b) noexcept;

std::vector<LintWarning> distinctness_lint(const style::StyleSheet& sheet, const LintOptions& options = {});

struct MetricsReport {
    int bins = 0;
    double similarity = 0;
    std::string histogram_digest_a;
    std::string histogram_digest_b;
    std::vector<LintWarning> warnings;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport evaluate(const Image& reference, const Image& rendered, int bins,
                       HistogramMode mode = HistogramMode::joint);

nlohmann::ordered_json to_json(const LintWarning& warning);
nlohmann::ordered_json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& doc);

}  // namespace cartoforge::metrics
