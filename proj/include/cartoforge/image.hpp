#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cartoforge/util/digest.hpp"

namespace cartoforge {

struct Rgba {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    std::uint8_t a = 255;

    friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// 8-bit straight-alpha RGBA raster, row-major, no padding.
class Image {
public:
    Image() = default;
    Image(int width, int height, Rgba fill = {0, 0, 0, 0});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    Rgba at(int x, int y) const noexcept {
        const std::uint8_t* p = &data_[index(x, y)];
        return {p[0], p[1], p[2], p[3]};
    }
    void set(int x, int y, Rgba c) noexcept {
        std::uint8_t* p = &data_[index(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
        p[3] = c.a;
    }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<const std::uint8_t> bytes() const noexcept { return data_; }
    std::span<std::uint8_t> bytes() noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 4;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Decodes PNG or JPEG. Throws Error{UndecodableImage}.
Image decode_image(std::span<const std::uint8_t> encoded);

/// Deterministic PNG encoding (fixed compression, no time or text chunks).
util::Bytes encode_png(const Image& image);

/// Area-weighted resampling on premultiplied alpha; works for up- and
/// downscaling and keeps transparent regions transparent.
Image resample(const Image& src, int width, int height);

/// Shrinks so that the longer edge is at most `max_edge`; returns a copy
/// otherwise.
Image fit_within(const Image& src, int max_edge);

}  // namespace cartoforge
