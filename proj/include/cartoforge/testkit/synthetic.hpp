#pragma once

#include <utility>
#include <vector>

#include "cartoforge/image.hpp"
#include "cartoforge/render/dataset.hpp"
#include "cartoforge/style/color.hpp"
#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::testkit {

/// Deterministic stand-in data covering every element of `manifest`: fills
/// as blocks on a grid, lines as alternating horizontal and vertical streets,
/// icons and labels as points (labels carry their element name).
render::MapDataset synthetic_dataset(const style::LayerManifest& manifest);

/// Vertical bands of flat colour, widths proportional to `weights`.
Image swatch_collage(const std::vector<std::pair<style::Color, double>>& swatches, int width, int height);

}  // namespace cartoforge::testkit
