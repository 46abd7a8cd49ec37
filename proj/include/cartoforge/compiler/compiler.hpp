#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cartoforge/image.hpp"
#include "cartoforge/style/stylesheet.hpp"

namespace cartoforge::compiler {

using ordered_json = nlohmann::ordered_json;

/// Lowercase ASCII, spaces to hyphens.
std::string slug(std::string_view element_name);

/// "background", "fill-<slug>", "line-<slug>", "icon-<slug>", "label-<slug>".
std::string layer_id(style::Category category, std::string_view element_name);

/// Key of per-element maps: "fill:Water".
std::string element_key(style::Category category, std::string_view element_name);

enum class SourceKind { inline_geojson, vector_tileset };

struct SourceConfig {
    std::string source_id = "map-data";
    SourceKind kind = SourceKind::inline_geojson;
    /// vector-tileset: the tileset URL.
    std::string tileset_url;
    /// inline-geojson: prefix joined to each binding to form the source data URL.
    std::string data_prefix = "data/";
    /// element_key -> GeoJSON file name or source-layer name.
    std::map<std::string, std::string> bindings;

    /// Binds every manifest element to "<category>-<slug>.geojson"
    /// (inline-geojson) or "<category>-<slug>" (vector-tileset).
    static SourceConfig for_manifest(const style::LayerManifest& manifest, SourceKind kind = SourceKind::inline_geojson);
};

/// Default file name of an element's GeoJSON layer.
std::string geojson_file_name(style::Category category, std::string_view element_name);

struct CompileOptions {
    std::string name = "cartoforge";
    std::string label_field = "name";
    /// Omitted from the document when empty or when there are no icons/labels.
    std::string sprite_url = "sprite";
    std::string glyphs_url = "mapbox://fonts/mapbox/{fontstack}/{range}.pbf";
};

struct CompiledStyle {
    ordered_json document;
    /// element_key -> layer id
    std::map<std::string, std::string> layer_index;

    /// Two-space indented UTF-8.
    std::string serialize() const;
    /// Rebuilds the layer index from layer metadata.
    static CompiledStyle from_document(ordered_json document);

    friend bool operator==(const CompiledStyle&, const CompiledStyle&) = default;
};

/// Throws Error{IncompleteSheet} or Error{SourceBindingMissing}; slug
/// collisions inside a category are Error{SchemaViolation}.
CompiledStyle compile(const style::StyleSheet& sheet, const style::LayerManifest& manifest, const SourceConfig& src,
                      const CompileOptions& options = {});

/// Replaces the document's sources and every layer's source binding with
/// the ones `src` prescribes. Layers are matched by id.
void rebind_sources(ordered_json& document, const style::LayerManifest& manifest, const SourceConfig& src);

// ---------------------------------------------------------------------------
// Validation

struct Diagnostic {
    /// BadVersion, MissingRootKey, MalformedLayer, UnknownLayerType,
    /// UnknownProperty, BadColor, BadOpacity, DuplicateLayerId, MissingSource,
    /// MissingLayer, ValueMismatch
    std::string kind;
    std::string path;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Structural check against the v8 style specification. Colors must be hex.
std::vector<Diagnostic> validate_style(const nlohmann::json& document);

/// Checks that every element has its layer (by id) and that colors and
/// opacities read back equal to the sheet's.
std::vector<Diagnostic> check_fidelity(const nlohmann::json& document, const style::StyleSheet& sheet);

nlohmann::ordered_json to_json(const Diagnostic& diagnostic);

// ---------------------------------------------------------------------------
// Sprites

inline constexpr int kSpriteIconSize = 64;
inline constexpr int kSpriteColumns = 8;
inline constexpr int kSpriteAtlasWidth = kSpriteIconSize * kSpriteColumns;

struct SpriteEntry {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    int pixel_ratio = 1;

    friend bool operator==(const SpriteEntry&, const SpriteEntry&) = default;
};

struct SpriteBundle {
    /// Empty when there are no icons.
    Image atlas;
    /// icon slug -> rectangle, in packing order
    std::vector<std::pair<std::string, SpriteEntry>> index;

    ordered_json index_json() const;
    util::Bytes atlas_png() const;
};

/// Icons are keyed by element name and packed in the given order.
/// Throws Error{UndecodableImage}.
SpriteBundle build_sprite(const std::vector<std::pair<std::string, util::Bytes>>& icons);
SpriteBundle build_sprite(const std::vector<std::pair<std::string, Image>>& icons);

}  // namespace cartoforge::compiler
