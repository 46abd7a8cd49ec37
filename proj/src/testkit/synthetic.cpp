#include <cmath>

#include "cartoforge/error.hpp"
#include "cartoforge/testkit/synthetic.hpp"

namespace cartoforge::testkit {

using render::DatasetLayer;
using render::Feature;
using render::LonLat;

namespace {

constexpr double kWest = 121.48, kSouth = 31.22, kEast = 121.52, kNorth = 31.25;

LonLat at(double fx, double fy) { return {kWest + fx * (kEast - kWest), kSouth + fy * (kNorth - kSouth)}; }

}  // namespace

render::MapDataset synthetic_dataset(const style::LayerManifest& manifest) {
    render::MapDataset ds;
    ds.bbox = {kWest, kSouth, kEast, kNorth};

    const auto& fills = manifest.fill_elements;
    const int cols = fills.empty() ? 1 : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(fills.size()))));
    const int rows = fills.empty() ? 1 : (static_cast<int>(fills.size()) + cols - 1) / cols;
    for (std::size_t i = 0; i < fills.size(); ++i) {
        const double cw = 1.0 / cols, ch = 1.0 / rows;
        const double x0 = (static_cast<int>(i) % cols) * cw, y0 = (static_cast<int>(i) / cols) * ch;
        const double ix = cw * 0.12, iy = ch * 0.12;
        Feature f;
        f.polygons.push_back({{at(x0 + ix, y0 + iy), at(x0 + cw - ix, y0 + iy), at(x0 + cw - ix, y0 + ch - iy),
                               at(x0 + ix, y0 + ch - iy), at(x0 + ix, y0 + iy)}});
        f.properties = {{"name", fills[i]}};
        ds.layers.push_back({fills[i], style::Category::fill, {f}});
    }

    const auto& lines = manifest.line_elements;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const double t = (static_cast<double>(i / 2) + 1) / (static_cast<double>((lines.size() + 1) / 2) + 1);
        Feature f;
        if (i % 2 == 0) {
            f.lines.push_back({at(0.0, t), at(0.5, t + 0.02), at(1.0, t)});
        } else {
            f.lines.push_back({at(t, 0.0), at(t - 0.02, 0.5), at(t, 1.0)});
        }
        f.properties = {{"name", lines[i]}};
        ds.layers.push_back({lines[i], style::Category::line, {f}});
    }

    const auto& icons = manifest.icon_elements;
    for (std::size_t i = 0; i < icons.size(); ++i) {
        const double t = (static_cast<double>(i) + 1) / (static_cast<double>(icons.size()) + 1);
        Feature f;
        f.points.push_back(at(t, 1.0 - t));
        f.properties = {{"name", icons[i]}};
        ds.layers.push_back({icons[i], style::Category::icon, {f}});
    }

    const auto& labels = manifest.label_elements;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double t = (static_cast<double>(i) + 1) / (static_cast<double>(labels.size()) + 1);
        Feature f;
        f.points.push_back(at(0.25 + 0.5 * t, t));
        f.properties = {{"name", labels[i]}};
        ds.layers.push_back({labels[i], style::Category::label, {f}});
    }
    return ds;
}

Image swatch_collage(const std::vector<std::pair<style::Color, double>>& swatches, int width, int height) {
    if (swatches.empty() || width < 1 || height < 1) {
        throw Error(ErrorKind::InvalidArgument, "collage needs swatches and a positive size");
    }
    double total = 0;
    for (const auto& [c, w] : swatches) {
        if (!(w > 0)) throw Error(ErrorKind::InvalidArgument, "swatch weights must be positive");
        total += w;
    }
    Image img(width, height);
    double acc = 0;
    int x = 0;
    for (const auto& [c, w] : swatches) {
        acc += w;
        const int end = static_cast<int>(std::lround(acc / total * width));
        const auto rgb = c.rgb();
        for (; x < end; ++x)
            for (int y = 0; y < height; ++y) img.set(x, y, {rgb[0], rgb[1], rgb[2], 255});
    }
    return img;
}

}  // namespace cartoforge::testkit
