#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "cartoforge/metrics/metrics.hpp"
#include "cartoforge/util/digest.hpp"

namespace cartoforge::metrics {

int bin_of(double unit_value, int bins) noexcept {
    const int b = static_cast<int>(std::floor(unit_value * bins));
    return std::clamp(b, 0, bins - 1);
}

std::string ColorHistogram::digest() const {
    util::Bytes bytes;
    bytes.reserve(counts.size() * 8 + 8);
    auto put = [&bytes](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    put(static_cast<std::uint64_t>(bins) | (mode == HistogramMode::marginal ? 1ULL << 63 : 0));
    for (auto c : counts) put(c);
    return util::sha256_hex(bytes);
}

namespace {

/// Exact integer form of bin_of applied to the hexcone h, s and v.
std::array<std::size_t, 3> hsv_bins(Rgba px, int bins) noexcept {
    const long r = px.r, g = px.g, b = px.b, n = bins;
    const long max = std::max({r, g, b});
    const long min = std::min({r, g, b});
    const long delta = max - min;
    const long vb = std::min(max * n / 255, n - 1);
    const long sb = max == 0 ? 0 : std::min(delta * n / max, n - 1);
    long hb = 0;
    if (delta > 0) {
        long sixths;
        if (max == r) {
            sixths = g - b;
        } else if (max == g) {
            sixths = 2 * delta + b - r;
        } else {
            sixths = 4 * delta + r - g;
        }
        if (sixths < 0) sixths += 6 * delta;
        hb = std::min(sixths * n / (6 * delta), n - 1);
    }
    return {static_cast<std::size_t>(hb), static_cast<std::size_t>(sb), static_cast<std::size_t>(vb)};
}

}  // namespace

ColorHistogram histogram(const Image& image, int bins, HistogramMode mode) {
    if (bins < 2) throw Error(ErrorKind::InvalidArgument, "histograms need at least 2 bins per channel");
    ColorHistogram out;
    out.bins = bins;
    out.mode = mode;
    const std::size_t b = static_cast<std::size_t>(bins);
    out.counts.assign(mode == HistogramMode::joint ? b * b * b : 3 * b, 0);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const Rgba px = image.at(x, y);
            if (px.a == 0) continue;
            const auto [hb, sb, vb] = hsv_bins(px, bins);
            if (mode == HistogramMode::joint) {
                ++out.counts[(hb * b + sb) * b + vb];
            } else {
                ++out.counts[hb];
                ++out.counts[b + sb];
                ++out.counts[2 * b + vb];
            }
            ++out.total;
        }
    }
    if (out.total == 0) throw Error(ErrorKind::EmptyImage, "image has no opaque pixels");
    return out;
}

double cosine_similarity(const ColorHistogram& a, const ColorHistogram& b) {
    if (a.bins != b.bins || a.mode != b.mode || a.counts.size() != b.counts.size()) {
        throw Error(ErrorKind::BinMismatch,
                    "histograms use " + std::to_string(a.bins) + " and " + std::to_string(b.bins) + " bins");
    }
    if (a.total == 0 || b.total == 0) throw Error(ErrorKind::ZeroHistogram, "histogram has no counts");
    unsigned __int128 dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        const unsigned __int128 x = a.counts[i], y = b.counts[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0 || nb == 0) throw Error(ErrorKind::ZeroHistogram, "histogram has no counts");
    const double value = static_cast<double>(dot) / (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)));
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace cartoforge::metrics
