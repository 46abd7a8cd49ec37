#include <algorithm>
#include <cmath>
#include <numbers>

#include "cartoforge/render/renderer.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/digest.hpp"

namespace cartoforge::render {

using style::Category;

namespace {

constexpr double kMaxLatitude = 85.05112878;

double merc_x(double lon) { return (lon + 180.0) / 360.0; }

double merc_y(double lat) {
    const double phi = std::clamp(lat, -kMaxLatitude, kMaxLatitude) * std::numbers::pi / 180.0;
    return (1.0 - std::asinh(std::tan(phi)) / std::numbers::pi) / 2.0;
}

struct Pt {
    double x;
    double y;
};

class Canvas {
public:
    Canvas(int w, int h, Rgba background) : image_(w, h, background) {}

    int width() const { return image_.width(); }
    int height() const { return image_.height(); }
    Image& image() { return image_; }

    void blend(int x, int y, Rgba src, double alpha) {
        const Rgba dst = image_.at(x, y);
        const double a = alpha * (src.a / 255.0);
        auto mix = [a](std::uint8_t s, std::uint8_t d) {
            return static_cast<std::uint8_t>(std::lround(s * a + d * (1.0 - a)));
        };
        const double out_a = a + (dst.a / 255.0) * (1.0 - a);
        image_.set(x, y, {mix(src.r, dst.r), mix(src.g, dst.g), mix(src.b, dst.b),
                          static_cast<std::uint8_t>(std::lround(out_a * 255.0))});
    }

private:
    Image image_;
};

Rgba rgba(const style::Color& c) {
    const auto [r, g, b] = c.rgb();
    return {r, g, b, 255};
}

class Mask {
public:
    Mask(int w, int h) : w_(w), h_(h), bits_(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

    void set(int x, int y) {
        if (x >= 0 && y >= 0 && x < w_ && y < h_) bits_[idx(x, y)] = 1;
    }
    bool get(int x, int y) const { return x >= 0 && y >= 0 && x < w_ && y < h_ && bits_[idx(x, y)]; }

private:
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + x; }
    int w_, h_;
    std::vector<std::uint8_t> bits_;
};

std::vector<Pt> project_ring(const Projection& proj, const std::vector<LonLat>& ring) {
    std::vector<Pt> out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
        const auto [x, y] = proj(p);
        out.push_back({x, y});
    }
    return out;
}

/// Even-odd coverage sampled at pixel centers.
void fill_polygon(Mask& mask, const std::vector<std::vector<Pt>>& rings, int w, int h) {
    double min_y = INFINITY, max_y = -INFINITY;
    for (const auto& r : rings)
        for (const auto& p : r) {
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    if (!(min_y <= max_y)) return;
    const int y_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y_end = std::min(h - 1, static_cast<int>(std::ceil(max_y + 0.5)));
    std::vector<double> xs;
    for (int y = y_begin; y <= y_end; ++y) {
        const double cy = y + 0.5;
        xs.clear();
        for (const auto& r : rings) {
            const std::size_t n = r.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Pt& a = r[i];
                const Pt& b = r[(i + 1) % n];
                if ((a.y <= cy) != (b.y <= cy)) xs.push_back(a.x + (cy - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int x0 = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
            const int x1 = std::min(w - 1, static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1);
            for (int x = x0; x <= x1; ++x) mask.set(x, y);
        }
    }
}

/// 1-px Bresenham segment between the pixels containing a and b.
void stroke_hairline(Mask& mask, Pt a, Pt b) {
    int x0 = static_cast<int>(std::floor(a.x)), y0 = static_cast<int>(std::floor(a.y));
    const int x1 = static_cast<int>(std::floor(b.x)), y1 = static_cast<int>(std::floor(b.y));
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        mask.set(x0, y0);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

double segment_distance(double px, double py, Pt a, Pt b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

/// Pixels whose centers lie within the half width of the segment.
void stroke_wide(Mask& mask, Pt a, Pt b, int w, int h) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - kLineHalfWidth - 1)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + kLineHalfWidth + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - kLineHalfWidth - 1)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + kLineHalfWidth + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (segment_distance(x + 0.5, y + 0.5, a, b) < kLineHalfWidth) mask.set(x, y);
}

/// Anchor points of a feature: each point, else the middle vertex of the
/// first line, else the vertex mean of the first outer ring.
std::vector<LonLat> anchors(const Feature& f) {
    if (!f.points.empty()) return f.points;
    for (const auto& line : f.lines)
        if (!line.empty()) return {line[line.size() / 2]};
    for (const auto& poly : f.polygons) {
        if (poly.empty() || poly[0].empty()) continue;
        const auto& ring = poly[0];
        std::size_t n = ring.size();
        if (n > 1 && ring.front() == ring.back()) --n;
        LonLat mean{0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            mean.lon += ring[i].lon;
            mean.lat += ring[i].lat;
        }
        return {{mean.lon / n, mean.lat / n}};
    }
    return {};
}

std::string label_text(const Feature& f, const std::string& field, const std::string& fallback) {
    const auto it = f.properties.find(field);
    if (it != f.properties.end()) {
        if (it->is_string()) return it->get<std::string>();
        if (it->is_number()) return it->dump();
    }
    return fallback;
}

char32_t next_code_point(std::string_view s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i++]);
    if (c < 0x80) return c;
    while (i < s.size() && (static_cast<unsigned char>(s[i]) & 0xc0) == 0x80) ++i;
    return U'?';
}

void draw_text(Mask& text, std::string_view s, int left, int top) {
    std::size_t i = 0;
    int cell = 0;
    while (i < s.size()) {
        const auto& cols = glyph(next_code_point(s, i));
        for (int c = 0; c < 5; ++c) {
            for (int r = 0; r < 7; ++r) {
                if (!((cols[c] >> r) & 1)) continue;
                const int x = left + (cell * 6 + c) * kFontScale;
                const int y = top + r * kFontScale;
                for (int dy = 0; dy < kFontScale; ++dy)
                    for (int dx = 0; dx < kFontScale; ++dx) text.set(x + dx, y + dy);
            }
        }
        ++cell;
    }
}

}  // namespace

Projection::Projection(const BBox& bbox, Viewport vp) {
    x0_ = merc_x(bbox[0]);
    y0_ = merc_y(bbox[3]);
    const double dx = merc_x(bbox[2]) - x0_;
    const double dy = merc_y(bbox[1]) - y0_;
    if (!(dx > 0) || !(dy > 0)) throw Error(ErrorKind::SchemaViolation, "bbox is degenerate");
    scale_ = std::min(vp.width_px / dx, vp.height_px / dy);
    off_x_ = (vp.width_px - dx * scale_) / 2.0;
    off_y_ = (vp.height_px - dy * scale_) / 2.0;
}

std::pair<double, double> Projection::operator()(const LonLat& p) const noexcept {
    return {off_x_ + (merc_x(p.lon) - x0_) * scale_, off_y_ + (merc_y(p.lat) - y0_) * scale_};
}

RenderedMap render(const MapDataset& dataset, const style::StyleSheet& sheet, const std::map<std::string, Image>& icons,
                   Viewport vp, const RenderOptions& options) {
    if (vp.width_px < kMinViewportEdge || vp.height_px < kMinViewportEdge) {
        throw Error(ErrorKind::EmptyViewport, "viewport " + std::to_string(vp.width_px) + "x" +
                                                  std::to_string(vp.height_px) + " is below 64 px");
    }
    for (const auto& layer : dataset.layers) {
        const auto styled = sheet.names(layer.category);
        if (std::find(styled.begin(), styled.end(), layer.name) == styled.end()) {
            throw Error(ErrorKind::IncompleteSheet, "no style for " + std::string(style::to_string(layer.category)) +
                                                        ":" + layer.name);
        }
        if (layer.category == Category::icon && !icons.contains(layer.name)) {
            throw Error(ErrorKind::MissingIcon, "no icon image for \"" + layer.name + "\"");
        }
    }

    const int w = vp.width_px, h = vp.height_px;
    const Projection proj(dataset.bbox, vp);
    Canvas canvas(w, h, rgba(sheet.background.background_color));

    for (const auto& [name, fill] : sheet.fills) {
        const DatasetLayer* layer = dataset.find(Category::fill, name);
        if (!layer) continue;
        Mask area(w, h), outline(w, h);
        for (const auto& f : layer->features) {
            for (const auto& poly : f.polygons) {
                std::vector<std::vector<Pt>> rings;
                for (const auto& ring : poly) rings.push_back(project_ring(proj, ring));
                fill_polygon(area, rings, w, h);
                for (const auto& r : rings)
                    for (std::size_t i = 0; i < r.size(); ++i) stroke_hairline(outline, r[i], r[(i + 1) % r.size()]);
            }
        }
        const double a = fill.fill_opacity.value();
        const Rgba fc = rgba(fill.fill_color), oc = rgba(fill.fill_outline_color);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (outline.get(x, y)) {
                    canvas.blend(x, y, oc, a);
                } else if (area.get(x, y)) {
                    canvas.blend(x, y, fc, a);
                }
            }
        }
    }

    for (const auto& [name, line] : sheet.lines) {
        const DatasetLayer* layer = dataset.find(Category::line, name);
        if (!layer) continue;
        Mask stroke(w, h);
        auto draw = [&](const std::vector<LonLat>& coords, bool closed) {
            const auto pts = project_ring(proj, coords);
            if (pts.size() == 1) stroke_wide(stroke, pts[0], pts[0], w, h);
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) stroke_wide(stroke, pts[i], pts[i + 1], w, h);
            if (closed && pts.size() > 2) stroke_wide(stroke, pts.back(), pts.front(), w, h);
        };
        for (const auto& f : layer->features) {
            for (const auto& l : f.lines) draw(l, false);
            for (const auto& poly : f.polygons)
                for (const auto& ring : poly) draw(ring, true);
        }
        const double a = line.line_opacity.value();
        const Rgba lc = rgba(line.line_color);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (stroke.get(x, y)) canvas.blend(x, y, lc, a);
    }

    for (const auto& [name, spec] : sheet.icons) {
        const DatasetLayer* layer = dataset.find(Category::icon, name);
        if (!layer) continue;
        const Image& src = icons.at(name);
        const Image icon = src.width() == kIconSize && src.height() == kIconSize ? src : resample(src, kIconSize, kIconSize);
        Image buffer(w, h);
        for (const auto& f : layer->features) {
            for (const auto& p : anchors(f)) {
                const auto [px, py] = proj(p);
                const int left = static_cast<int>(std::lround(px - kIconSize / 2.0));
                const int top = static_cast<int>(std::lround(py - kIconSize / 2.0));
                for (int y = 0; y < kIconSize; ++y)
                    for (int x = 0; x < kIconSize; ++x)
                        if (buffer.contains(left + x, top + y) && icon.at(x, y).a > 0)
                            buffer.set(left + x, top + y, icon.at(x, y));
            }
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (const Rgba px = buffer.at(x, y); px.a > 0) canvas.blend(x, y, px, 1.0);
    }

    for (const auto& [name, label] : sheet.labels) {
        const DatasetLayer* layer = dataset.find(Category::label, name);
        if (!layer) continue;
        Mask text(w, h), halo(w, h);
        for (const auto& f : layer->features) {
            const std::string s = label_text(f, options.label_field, name);
            const int tw = text_width(s);
            const int th = 7 * kFontScale;
            for (const auto& p : anchors(f)) {
                const auto [px, py] = proj(p);
                draw_text(text, s, static_cast<int>(std::lround(px - tw / 2.0)),
                          static_cast<int>(std::lround(py - th / 2.0)));
            }
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (text.get(x, y))
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) halo.set(x + dx, y + dy);
        const Rgba tc = rgba(label.text_color), hc = rgba(label.text_halo_color);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (text.get(x, y)) {
                    canvas.blend(x, y, tc, 1.0);
                } else if (halo.get(x, y)) {
                    canvas.blend(x, y, hc, 1.0);
                }
            }
        }
    }

    RenderedMap out;
    out.pixels = std::move(canvas.image());
    out.provenance = "builtin";
    out.style_digest = util::sha256_hex(style::serialize_stylesheet(sheet));
    return out;
}

}  // namespace cartoforge::render
