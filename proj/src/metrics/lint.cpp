#include <cstdio>

#include "cartoforge/metrics/metrics.hpp"

namespace cartoforge::metrics {

namespace {

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::vector<LintWarning> distinctness_lint(const style::StyleSheet& sheet, const LintOptions& options) {
    std::vector<std::pair<std::string, style::Color>> areas;
    for (const auto& [name, fill] : sheet.fills) areas.emplace_back("fill:" + name, fill.fill_color);
    areas.emplace_back("background", sheet.background.background_color);

    std::vector<LintWarning> out;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        for (std::size_t j = i + 1; j < areas.size(); ++j) {
            const double d = cone_distance(areas[i].second, areas[j].second);
            if (d < options.tau) {
                out.push_back({"distinctness",
                               {areas[i].first, areas[j].first},
                               d,
                               areas[i].first + " (" + areas[i].second.hex() + ") and " + areas[j].first + " (" +
                                   areas[j].second.hex() + ") are nearly indistinguishable, distance " + fixed(d)});
            }
        }
    }
    for (const auto& [name, label] : sheet.labels) {
        const double ratio = contrast_ratio(label.text_color, label.text_halo_color);
        if (ratio < options.min_contrast) {
            out.push_back({"label-contrast",
                           {"label:" + name},
                           ratio,
                           "label:" + name + " text " + label.text_color.hex() + " on halo " +
                               label.text_halo_color.hex() + " has contrast ratio " + fixed(ratio)});
        }
    }
    return out;
}

MetricsReport evaluate(const Image& reference, const Image& rendered, int bins, HistogramMode mode) {
    const auto a = histogram(reference, bins, mode);
    const auto b = histogram(rendered, bins, mode);
    MetricsReport report;
    report.bins = bins;
    report.similarity = cosine_similarity(a, b);
    report.histogram_digest_a = a.digest();
    report.histogram_digest_b = b.digest();
    return report;
}

nlohmann::ordered_json to_json(const LintWarning& warning) {
    return {{"kind", warning.kind}, {"elements", warning.elements}, {"value", warning.value},
            {"message", warning.message}};
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
    nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
    for (const auto& w : report.warnings) warnings.push_back(to_json(w));
    return {{"bins", report.bins},
            {"similarity", report.similarity},
            {"histogram_digest_a", report.histogram_digest_a},
            {"histogram_digest_b", report.histogram_digest_b},
            {"warnings", warnings}};
}

MetricsReport metrics_from_json(const nlohmann::json& doc) {
    try {
        MetricsReport r;
        r.bins = doc.at("bins").get<int>();
        r.similarity = doc.at("similarity").get<double>();
        r.histogram_digest_a = doc.at("histogram_digest_a").get<std::string>();
        r.histogram_digest_b = doc.at("histogram_digest_b").get<std::string>();
        for (const auto& w : doc.at("warnings")) {
            r.warnings.push_back({w.at("kind").get<std::string>(), w.at("elements").get<std::vector<std::string>>(),
                                  w.at("value").get<double>(), w.at("message").get<std::string>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaViolation, std::string("metrics document: ") + e.what());
    }
}

}  // namespace cartoforge::metrics
