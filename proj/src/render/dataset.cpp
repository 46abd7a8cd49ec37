#include "cartoforge/render/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cartoforge/compiler/compiler.hpp"
#include "cartoforge/style/json_io.hpp"
#include "cartoforge/util/digest.hpp"
#include "cartoforge/util/fs.hpp"

namespace cartoforge::render {

using nlohmann::json;
using nlohmann::ordered_json;
using style::Category;

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorKind::SchemaViolation, message); }

LonLat position(const json& p) {
    if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) bad("bad GeoJSON position " + p.dump());
    return {p[0].get<double>(), p[1].get<double>()};
}

std::vector<LonLat> positions(const json& a) {
    if (!a.is_array()) bad("expected an array of positions");
    std::vector<LonLat> out;
    out.reserve(a.size());
    for (const auto& p : a) out.push_back(position(p));
    return out;
}

Polygon polygon(const json& a) {
    if (!a.is_array()) bad("expected an array of rings");
    Polygon out;
    for (const auto& ring : a) out.push_back(positions(ring));
    return out;
}

void add_geometry(Feature& f, const json& g) {
    if (g.is_null()) return;
    if (!g.is_object() || !g.contains("type")) bad("geometry must be an object with a type");
    const std::string type = g["type"].get<std::string>();
    if (type == "GeometryCollection") {
        for (const auto& part : g.at("geometries")) add_geometry(f, part);
        return;
    }
    const json& c = g.at("coordinates");
    if (type == "Point") {
        f.points.push_back(position(c));
    } else if (type == "MultiPoint") {
        for (auto& p : positions(c)) f.points.push_back(p);
    } else if (type == "LineString") {
        f.lines.push_back(positions(c));
    } else if (type == "MultiLineString") {
        for (const auto& l : c) f.lines.push_back(positions(l));
    } else if (type == "Polygon") {
        f.polygons.push_back(polygon(c));
    } else if (type == "MultiPolygon") {
        for (const auto& p : c) f.polygons.push_back(polygon(p));
    } else {
        bad("unsupported geometry type \"" + type + "\"");
    }
}

ordered_json pos_json(const LonLat& p) { return ordered_json::array({p.lon, p.lat}); }

ordered_json line_json(const std::vector<LonLat>& l) {
    ordered_json out = ordered_json::array();
    for (const auto& p : l) out.push_back(pos_json(p));
    return out;
}

ordered_json polygon_json(const Polygon& poly) {
    ordered_json out = ordered_json::array();
    for (const auto& r : poly) out.push_back(line_json(r));
    return out;
}

ordered_json geometry_json(const Feature& f) {
    std::vector<ordered_json> parts;
    if (f.points.size() == 1) {
        parts.push_back({{"type", "Point"}, {"coordinates", pos_json(f.points[0])}});
    } else if (!f.points.empty()) {
        parts.push_back({{"type", "MultiPoint"}, {"coordinates", line_json(f.points)}});
    }
    if (f.lines.size() == 1) {
        parts.push_back({{"type", "LineString"}, {"coordinates", line_json(f.lines[0])}});
    } else if (!f.lines.empty()) {
        ordered_json c = ordered_json::array();
        for (const auto& l : f.lines) c.push_back(line_json(l));
        parts.push_back({{"type", "MultiLineString"}, {"coordinates", c}});
    }
    if (f.polygons.size() == 1) {
        parts.push_back({{"type", "Polygon"}, {"coordinates", polygon_json(f.polygons[0])}});
    } else if (!f.polygons.empty()) {
        ordered_json c = ordered_json::array();
        for (const auto& p : f.polygons) c.push_back(polygon_json(p));
        parts.push_back({{"type", "MultiPolygon"}, {"coordinates", c}});
    }
    if (parts.empty()) return nullptr;
    if (parts.size() == 1) return parts[0];
    return {{"type", "GeometryCollection"}, {"geometries", parts}};
}

Category element_category(const json& v) {
    const auto c = v.is_string() ? style::category_from_string(v.get<std::string>()) : std::nullopt;
    if (!c || *c == Category::background) bad("layer category must be icon, label, line or fill");
    return *c;
}

void check_bbox(const BBox& b) {
    for (double v : b)
        if (!std::isfinite(v)) bad("bbox has a non-finite value");
    if (!(b[0] < b[2]) || !(b[1] < b[3])) bad("bbox is degenerate");
}

BBox read_bbox(const json& v) {
    if (!v.is_array() || v.size() != 4) bad("bbox must be [min_lon, min_lat, max_lon, max_lat]");
    BBox b{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!v[i].is_number()) bad("bbox entries must be numbers");
        b[i] = v[i].get<double>();
    }
    check_bbox(b);
    return b;
}

}  // namespace

const DatasetLayer* MapDataset::find(Category category, std::string_view name) const noexcept {
    for (const auto& l : layers)
        if (l.category == category && l.name == name) return &l;
    return nullptr;
}

style::LayerManifest MapDataset::manifest() const {
    style::LayerManifest m;
    for (const auto& l : layers) m.elements(l.category).push_back(l.name);
    return m;
}

void MapDataset::validate(const style::LayerManifest& manifest) const {
    check_bbox(bbox);
    std::set<std::pair<Category, std::string>> seen;
    for (const auto& l : layers) {
        if (!seen.emplace(l.category, l.name).second) {
            bad("dataset repeats " + std::string(style::to_string(l.category)) + " layer \"" + l.name + "\"");
        }
        const auto& names = manifest.elements(l.category);
        if (std::find(names.begin(), names.end(), l.name) == names.end()) {
            bad("dataset layer " + std::string(style::to_string(l.category)) + ":" + l.name +
                " is not in the manifest");
        }
    }
}

std::string MapDataset::digest() const { return util::sha256_hex(dataset_to_bundle(*this).dump()); }

BBox bounds_of(const std::vector<DatasetLayer>& layers) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    BBox b{inf, inf, -inf, -inf};
    auto grow = [&b](const LonLat& p) {
        b[0] = std::min(b[0], p.lon);
        b[1] = std::min(b[1], p.lat);
        b[2] = std::max(b[2], p.lon);
        b[3] = std::max(b[3], p.lat);
    };
    for (const auto& l : layers) {
        for (const auto& f : l.features) {
            for (const auto& p : f.points) grow(p);
            for (const auto& line : f.lines)
                for (const auto& p : line) grow(p);
            for (const auto& poly : f.polygons)
                for (const auto& ring : poly)
                    for (const auto& p : ring) grow(p);
        }
    }
    if (b[0] == inf) bad("dataset has no coordinates to derive a bbox from");
    return b;
}

std::vector<Feature> features_from_geojson(const json& collection) {
    try {
        if (!collection.is_object() || collection.value("type", "") != "FeatureCollection") {
            bad("expected a GeoJSON FeatureCollection");
        }
        std::vector<Feature> out;
        for (const auto& f : collection.at("features")) {
            if (f.value("type", "") != "Feature") bad("FeatureCollection member is not a Feature");
            Feature feature;
            add_geometry(feature, f.contains("geometry") ? f["geometry"] : json());
            if (f.contains("properties") && f["properties"].is_object()) feature.properties = f["properties"];
            out.push_back(std::move(feature));
        }
        return out;
    } catch (const json::exception& e) {
        bad(std::string("GeoJSON: ") + e.what());
    }
}

ordered_json features_to_geojson(const std::vector<Feature>& features) {
    ordered_json list = ordered_json::array();
    for (const auto& f : features) {
        list.push_back({{"type", "Feature"}, {"properties", ordered_json(f.properties)}, {"geometry", geometry_json(f)}});
    }
    return {{"type", "FeatureCollection"}, {"features", list}};
}

MapDataset dataset_from_bundle(const json& bundle) {
    try {
        MapDataset d;
        for (const auto& l : bundle.at("layers")) {
            DatasetLayer layer;
            layer.name = l.at("name").get<std::string>();
            layer.category = element_category(l.at("category"));
            layer.features = features_from_geojson(l.at("geojson"));
            d.layers.push_back(std::move(layer));
        }
        d.bbox = bundle.contains("bbox") ? read_bbox(bundle["bbox"]) : bounds_of(d.layers);
        check_bbox(d.bbox);
        return d;
    } catch (const json::exception& e) {
        bad(std::string("dataset bundle: ") + e.what());
    }
}

ordered_json dataset_to_bundle(const MapDataset& dataset) {
    ordered_json layers = ordered_json::array();
    for (const auto& l : dataset.layers) {
        layers.push_back({{"name", l.name},
                          {"category", std::string(style::to_string(l.category))},
                          {"geojson", features_to_geojson(l.features)}});
    }
    return {{"bbox", dataset.bbox}, {"layers", layers}};
}

MapDataset load_dataset(const std::filesystem::path& dir) {
    const json index = style::parse_json(util::read_text(dir / "dataset.json"));
    try {
        MapDataset d;
        for (const auto& l : index.at("layers")) {
            DatasetLayer layer;
            layer.name = l.at("name").get<std::string>();
            layer.category = element_category(l.at("category"));
            const std::string file =
                l.contains("file") ? l["file"].get<std::string>() : compiler::geojson_file_name(layer.category, layer.name);
            layer.features = features_from_geojson(style::parse_json(util::read_text(dir / file)));
            d.layers.push_back(std::move(layer));
        }
        d.bbox = index.contains("bbox") ? read_bbox(index["bbox"]) : bounds_of(d.layers);
        check_bbox(d.bbox);
        return d;
    } catch (const json::exception& e) {
        bad("dataset.json: " + std::string(e.what()));
    }
}

void save_dataset(const MapDataset& dataset, const std::filesystem::path& dir) {
    ordered_json layers = ordered_json::array();
    for (const auto& l : dataset.layers) {
        const std::string file = compiler::geojson_file_name(l.category, l.name);
        util::write_atomic(dir / file, features_to_geojson(l.features).dump(2) + "\n");
        layers.push_back({{"name", l.name}, {"category", std::string(style::to_string(l.category))}, {"file", file}});
    }
    ordered_json index = {{"bbox", dataset.bbox}, {"layers", layers}};
    util::write_atomic(dir / "dataset.json", index.dump(2) + "\n");
}

}  // namespace cartoforge::render
