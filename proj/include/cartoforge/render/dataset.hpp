#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::render {

struct LonLat {
    double lon = 0;
    double lat = 0;

    friend bool operator==(const LonLat&, const LonLat&) = default;
};

using Ring = std::vector<LonLat>;
using Polygon = std::vector<Ring>;  ///< outer ring first

/// One GeoJSON feature, flattened by geometry dimension.
struct Feature {
    std::vector<LonLat> points;
    std::vector<std::vector<LonLat>> lines;
    std::vector<Polygon> polygons;
    nlohmann::json properties = nlohmann::json::object();

    friend bool operator==(const Feature&, const Feature&) = default;
};

struct DatasetLayer {
    std::string name;
    style::Category category = style::Category::fill;
    std::vector<Feature> features;

    friend bool operator==(const DatasetLayer&, const DatasetLayer&) = default;
};

/// [min_lon, min_lat, max_lon, max_lat]
using BBox = std::array<double, 4>;

struct MapDataset {
    BBox bbox{};
    std::vector<DatasetLayer> layers;

    const DatasetLayer* find(style::Category category, std::string_view name) const noexcept;
    /// Element names in layer order.
    style::LayerManifest manifest() const;
    /// Throws Error{SchemaViolation} when a layer is not listed under its
    /// category in `manifest`, a (category, name) repeats, or the bbox is
    /// degenerate.
    void validate(const style::LayerManifest& manifest) const;
    /// SHA-256 of the canonical bundle form.
    std::string digest() const;

    friend bool operator==(const MapDataset&, const MapDataset&) = default;
};

/// Smallest box around every coordinate; Error{SchemaViolation} when the
/// data has no coordinates.
BBox bounds_of(const std::vector<DatasetLayer>& layers);

/// Parses a GeoJSON FeatureCollection (RFC 7946). Throws Error{SchemaViolation}.
std::vector<Feature> features_from_geojson(const nlohmann::json& collection);
nlohmann::ordered_json features_to_geojson(const std::vector<Feature>& features);

/// Single-document form used for uploads:
/// `{"bbox": [...]?, "layers": [{"name", "category", "geojson": {FeatureCollection}}]}`.
MapDataset dataset_from_bundle(const nlohmann::json& bundle);
nlohmann::ordered_json dataset_to_bundle(const MapDataset& dataset);

/// Directory form: `dataset.json` with `{"bbox": [...], "layers": [{"name",
/// "category", "file"}]}` plus one GeoJSON file per layer.
MapDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const MapDataset& dataset, const std::filesystem::path& dir);

}  // namespace cartoforge::render
