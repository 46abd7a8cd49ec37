#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cartoforge/compiler/compiler.hpp"
#include "cartoforge/image.hpp"
#include "cartoforge/render/dataset.hpp"
#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::render {

struct Viewport {
    int width_px = 1024;
    int height_px = 768;

    friend bool operator==(const Viewport&, const Viewport&) = default;
};

inline constexpr int kMinViewportEdge = 64;
inline constexpr int kIconSize = 32;
inline constexpr double kLineHalfWidth = 1.0;
inline constexpr int kFontScale = 2;

struct RenderedMap {
    Image pixels;
    /// "builtin" or "external:<adapter id>"
    std::string provenance;
    std::string style_digest;
};

/// Web-mercator fit of a bbox into a viewport, centered, aspect preserved.
class Projection {
public:
    Projection(const BBox& bbox, Viewport vp);
    /// Pixel-space position; (0, 0) is the top-left corner of the raster.
    std::pair<double, double> operator()(const LonLat& p) const noexcept;

private:
    double x0_ = 0, y0_ = 0, scale_ = 1, off_x_ = 0, off_y_ = 0;
};

struct RenderOptions {
    std::string label_field = "name";
};

/// Draws background, fills, lines, icons, labels in sheet order.
/// Every dataset layer needs a style (Error{IncompleteSheet}); icon layers
/// need an image keyed by element name (Error{MissingIcon}); viewports
/// below 64 px are Error{EmptyViewport}.
RenderedMap render(const MapDataset& dataset, const style::StyleSheet& sheet, const std::map<std::string, Image>& icons,
                   Viewport vp, const RenderOptions& options = {});

// ---------------------------------------------------------------------------
// Bitmap text

/// Column bitmaps of the 5x7 glyph for `c` (bit 0 is the top row). Code
/// points outside printable ASCII map to '?'.
const std::array<std::uint8_t, 5>& glyph(char32_t c) noexcept;
/// Width in pixels of `text` at `scale`, with one blank column between glyphs.
int text_width(std::string_view utf8_text, int scale = kFontScale);

// ---------------------------------------------------------------------------
// External renderers

struct AdapterSpec {
    /// argv prefix; the first entry is looked up on PATH when it has no '/'.
    std::vector<std::string> command;
    /// Defaults to the executable's file name.
    std::string id;

    /// Splits on whitespace.
    static AdapterSpec parse(std::string_view command_line);
};

/// Writes style.json, sprite.png/sprite.json and data/ into a scratch
/// directory and runs `<command> --style <path> --data <dir> --width N
/// --height N --out <png>`. Throws Error{AdapterNotFound},
/// Error{AdapterFailed} (status = exit code, detail = stderr) or
/// Error{BadOutputSize}.
RenderedMap external_render(const compiler::CompiledStyle& style, const compiler::SpriteBundle& sprite,
                            const MapDataset& dataset, Viewport vp, const AdapterSpec& adapter);

}  // namespace cartoforge::render
