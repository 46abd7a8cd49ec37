#include <doctest.h>

#include "../support/test_support.hpp"
#include "cartoforge/compiler/compiler.hpp"

using namespace cartoforge;
using namespace cartoforge::compiler;
using cartoforge::testing::Gen;
using style::Category;

namespace {

CompiledStyle compile_default(const style::StyleSheet& sheet, const style::LayerManifest& manifest) {
    return compile(sheet, manifest, SourceConfig::for_manifest(manifest));
}

style::LayerManifest manifest_of(const style::StyleSheet& sheet) {
    style::LayerManifest m;
    for (Category c : style::kElementCategories) m.elements(c) = sheet.names(c);
    return m;
}

const nlohmann::ordered_json* find_layer(const nlohmann::ordered_json& doc, const std::string& id) {
    for (const auto& layer : doc["layers"])
        if (layer["id"] == id) return &layer;
    return nullptr;
}

bool has_kind(const std::vector<Diagnostic>& d, const std::string& kind) {
    return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.kind == kind; });
}

}  // namespace

TEST_SUITE("compile") {
    TEST_CASE("background layer") {
        style::StyleSheet sheet;
        sheet.background.background_color = style::Color::parse("#FAF3D3");
        style::LayerManifest manifest;
        const auto compiled = compile_default(sheet, manifest);
        const auto expected = nlohmann::ordered_json::parse(
            R"({"id":"background","type":"background","paint":{"background-color":"#faf3d3"}})");
        CHECK(compiled.document["layers"][0] == expected);
        CHECK(compiled.document["version"] == 8);
        CHECK(validate_style(compiled.document).empty());
    }

    TEST_CASE("reference line values") {
        const auto sheet = style::parse_stylesheet(testing::fixture_text("reference/sunflowers_lines.json"));
        const auto compiled = compile_default(sheet, manifest_of(sheet));
        const auto* primary = find_layer(compiled.document, "line-primary_road");
        REQUIRE(primary != nullptr);
        CHECK((*primary)["type"] == "line");
        CHECK((*primary)["paint"].dump() == R"({"line-color":"#8b0000","line-opacity":1.0})");
        CHECK(compiled.layer_index.at("line:Primary_Road") == "line-primary_road");
    }

    TEST_CASE("full sheet structure") {
        const auto manifest = testing::neighborhood_manifest();
        const auto compiled = compile_default(testing::sunflowers_sheet(), manifest);
        const auto& doc = compiled.document;
        CHECK(validate_style(doc).empty());
        const auto* label = find_layer(doc, "label-street-road");
        REQUIRE(label != nullptr);
        CHECK((*label)["layout"]["text-field"].dump() == R"(["get","name"])");
        CHECK((*label)["paint"]["text-halo-width"] == 1);
        const auto* icon = find_layer(doc, "icon-metro-station");
        REQUIRE(icon != nullptr);
        CHECK((*icon)["layout"]["icon-image"] == "metro-station");
        CHECK((*icon)["source"] == "map-data-icon-metro-station");
        CHECK(doc["sources"]["map-data-icon-metro-station"]["data"] == "data/icon-metro-station.geojson");
        CHECK(doc["sprite"] == "sprite");
        CHECK(doc.contains("glyphs"));
        CHECK(compiled.layer_index.size() == 1 + manifest.element_count());
        CHECK(CompiledStyle::from_document(doc).layer_index == compiled.layer_index);
    }

    TEST_CASE("vector tileset binding") {
        const auto manifest = testing::neighborhood_manifest();
        auto src = SourceConfig::for_manifest(manifest, SourceKind::vector_tileset);
        src.tileset_url = "mapbox://example.tiles";
        const auto compiled = compile(testing::sunflowers_sheet(), manifest, src, {.label_field = "name_en"});
        const auto& doc = compiled.document;
        CHECK(doc["sources"].size() == 1);
        CHECK(doc["sources"]["map-data"]["type"] == "vector");
        const auto* water = find_layer(doc, "fill-water");
        REQUIRE(water != nullptr);
        CHECK((*water)["source"] == "map-data");
        CHECK((*water)["source-layer"] == "fill-water");
        CHECK((*find_layer(doc, "label-street-road"))["layout"]["text-field"][1] == "name_en");
        CHECK(validate_style(doc).empty());
    }

    TEST_CASE("errors") {
        const auto manifest = testing::neighborhood_manifest();
        auto sheet = testing::sunflowers_sheet();
        auto missing = manifest;
        missing.fill_elements.push_back("Canal");
        CHECK_ERROR_KIND(compile_default(sheet, missing), ErrorKind::IncompleteSheet);
        auto src = SourceConfig::for_manifest(manifest);
        src.bindings.erase("line:Ferry");
        CHECK_ERROR_KIND(compile(sheet, manifest, src), ErrorKind::SourceBindingMissing);

        style::StyleSheet clash;
        clash.fills.insert("Open Space", {});
        clash.fills.insert("open space", {});
        CHECK_ERROR_KIND(compile_default(clash, manifest_of(clash)), ErrorKind::SchemaViolation);
    }

    TEST_CASE("property: layer count, z-order, fidelity, determinism, self-validation") {
        Gen gen(99);
        for (int i = 0; i < 150; ++i) {
            const auto manifest = gen.manifest();
            const auto sheet = gen.sheet_for(manifest);
            const auto compiled = compile_default(sheet, manifest);
            const auto& layers = compiled.document["layers"];
            REQUIRE(layers.size() == 1 + sheet.fills.size() + sheet.lines.size() + sheet.icons.size() + sheet.labels.size());
            CHECK(validate_style(compiled.document).empty());
            CHECK(check_fidelity(compiled.document, sheet).empty());
            CHECK(compiled.serialize() == compile_default(sheet, manifest).serialize());

            CHECK(layers[0]["type"] == "background");
            int rank_prev = 0;
            for (std::size_t k = 1; k < layers.size(); ++k) {
                const std::string t = layers[k]["type"];
                const int rank = t == "fill" ? 1 : t == "line" ? 2 : 3;
                CHECK(rank >= rank_prev);
                rank_prev = rank;
            }

            // Read every paint value back out of the serialized text.
            const auto reparsed = nlohmann::json::parse(compiled.serialize());
            CHECK(reparsed["layers"][0]["paint"]["background-color"] == sheet.background.background_color.hex());
            for (const auto& [name, fill] : sheet.fills) {
                const auto* l = find_layer(compiled.document, layer_id(Category::fill, name));
                REQUIRE(l != nullptr);
                CHECK((*l)["paint"]["fill-color"] == fill.fill_color.hex());
                CHECK((*l)["paint"]["fill-outline-color"] == fill.fill_outline_color.hex());
                CHECK((*l)["paint"]["fill-opacity"].get<double>() == fill.fill_opacity.value());
            }
            for (const auto& [name, line] : sheet.lines) {
                const auto* l = find_layer(compiled.document, layer_id(Category::line, name));
                REQUIRE(l != nullptr);
                CHECK((*l)["paint"]["line-color"] == line.line_color.hex());
                CHECK((*l)["paint"]["line-opacity"].get<double>() == line.line_opacity.value());
            }
            for (auto& layer : reparsed["layers"]) {
                if (layer["type"] == "fill") {
                    const auto* fill = sheet.fills.find(layer["metadata"]["cartoforge:element"].get<std::string>());
                    REQUIRE(fill != nullptr);
                    CHECK(layer["paint"]["fill-opacity"].get<double>() == fill->fill_opacity.value());
                }
            }
        }
    }

    TEST_CASE("rebind_sources repairs a hand-written document") {
        const auto manifest = testing::neighborhood_manifest();
        const auto sheet = testing::sunflowers_sheet();
        auto doc = compile_default(sheet, manifest).document;
        doc["sources"] = {{"map-data", {{"type", "geojson"}, {"data", "x.geojson"}}}};
        for (auto& layer : doc["layers"]) {
            if (layer["type"] != "background") layer["source"] = "map-data";
            layer.erase("metadata");
        }
        CHECK(CompiledStyle::from_document(doc).layer_index.size() == 1);
        rebind_sources(doc, manifest, SourceConfig::for_manifest(manifest));
        CHECK(nlohmann::json(doc) == nlohmann::json(compile_default(sheet, manifest).document));
    }
}

TEST_SUITE("validate_style") {
    nlohmann::json base() {
        return nlohmann::json::parse(R"({"version":8,"sources":{"s":{"type":"geojson","data":"a.geojson"}},
          "layers":[{"id":"background","type":"background","paint":{"background-color":"#ffffff"}},
                    {"id":"fill-water","type":"fill","source":"s","paint":{"fill-color":"#4682b4","fill-opacity":0.5}}]})");
    }

    TEST_CASE("valid document") { CHECK(validate_style(base()).empty()); }

    TEST_CASE("misspelled paint key") {
        auto doc = base();
        doc["layers"][1]["paint"]["fill-colour"] = "#000000";
        const auto d = validate_style(doc);
        REQUIRE(d.size() == 1);
        CHECK(d[0].kind == "UnknownProperty");
        CHECK(d[0].path == "layers[1].paint.fill-colour");
    }

    TEST_CASE("version 7") {
        auto doc = base();
        doc["version"] = 7;
        const auto d = validate_style(doc);
        REQUIRE(d.size() == 1);
        CHECK(d[0].kind == "BadVersion");
    }

    TEST_CASE("other faults") {
        auto doc = base();
        doc["layers"][1]["paint"]["fill-opacity"] = 1.5;
        doc["layers"][0]["paint"]["background-color"] = "papayawhip";
        doc["layers"].push_back({{"id", "fill-water"}, {"type", "polygon"}});
        doc["layers"].push_back({{"id", "line-x"}, {"type", "line"}, {"source", "nope"}});
        doc["layers"].push_back({{"id", "line-y"}, {"type", "line"}, {"layout", {{"line-color", "#000"}}}});
        const auto d = validate_style(doc);
        CHECK(has_kind(d, "BadOpacity"));
        CHECK(has_kind(d, "BadColor"));
        CHECK(has_kind(d, "DuplicateLayerId"));
        CHECK(has_kind(d, "UnknownLayerType"));
        CHECK(has_kind(d, "MissingSource"));
        CHECK(has_kind(d, "UnknownProperty"));
        doc.erase("sources");
        CHECK(has_kind(validate_style(doc), "MissingRootKey"));
        CHECK(has_kind(validate_style(nlohmann::json::array()), "MissingRootKey"));
    }

    TEST_CASE("fidelity diagnostics") {
        const auto manifest = testing::neighborhood_manifest();
        const auto sheet = testing::sunflowers_sheet();
        auto doc = compile_default(sheet, manifest).document;
        for (auto& layer : doc["layers"]) {
            if (layer["id"] == "fill-water") layer["paint"]["fill-opacity"] = 0.9;
            if (layer["id"] == "line-ferry") layer["paint"]["line-color"] = "#556B2F";
        }
        doc["layers"].erase(doc["layers"].size() - 1);
        const auto d = check_fidelity(doc, sheet);
        REQUIRE(d.size() == 2);
        CHECK(d[0].kind == "ValueMismatch");
        CHECK(d[0].path == "fill-water.paint.fill-opacity");
        CHECK(d[1].kind == "MissingLayer");
    }
}

TEST_SUITE("build_sprite") {
    Image solid(int w, int h, Rgba c) { return Image(w, h, c); }

    TEST_CASE("one icon") {
        const auto bundle = build_sprite(std::vector<std::pair<std::string, Image>>{{"Metro station", solid(16, 16, {255, 0, 0, 255})}});
        CHECK(bundle.atlas.width() == 512);
        CHECK(bundle.atlas.height() == 64);
        REQUIRE(bundle.index.size() == 1);
        CHECK(bundle.index[0].first == "metro-station");
        CHECK(bundle.index[0].second == SpriteEntry{0, 0, 64, 64, 1});
        CHECK(bundle.atlas.at(63, 63) == Rgba{255, 0, 0, 255});
        CHECK(bundle.atlas.at(64, 0).a == 0);
        CHECK(bundle.index_json().dump() == R"({"metro-station":{"x":0,"y":0,"width":64,"height":64,"pixelRatio":1}})");
    }

    TEST_CASE("nine icons wrap to a second row") {
        std::vector<std::pair<std::string, util::Bytes>> icons;
        for (int i = 0; i < 9; ++i) {
            icons.emplace_back("icon " + std::to_string(i), encode_png(solid(100, 50, {0, 0, static_cast<std::uint8_t>(i * 20), 128})));
        }
        const auto bundle = build_sprite(icons);
        CHECK(bundle.atlas.height() == 128);
        CHECK(bundle.index[8].second.x == 0);
        CHECK(bundle.index[8].second.y == 64);
        CHECK(bundle.index[7].second.x == 448);
        CHECK(bundle.atlas.at(10, 70).a == 128);
        // Rectangles are disjoint and inside the atlas.
        for (std::size_t a = 0; a < bundle.index.size(); ++a) {
            const auto& ea = bundle.index[a].second;
            CHECK(ea.x + ea.width <= bundle.atlas.width());
            CHECK(ea.y + ea.height <= bundle.atlas.height());
            for (std::size_t b = a + 1; b < bundle.index.size(); ++b) {
                const auto& eb = bundle.index[b].second;
                const bool apart = ea.x + ea.width <= eb.x || eb.x + eb.width <= ea.x || ea.y + ea.height <= eb.y ||
                                   eb.y + eb.height <= ea.y;
                CHECK(apart);
            }
        }
        CHECK(decode_image(bundle.atlas_png()) == bundle.atlas);
    }

    TEST_CASE("corrupt bytes") {
        std::vector<std::pair<std::string, util::Bytes>> icons{{"bad", util::Bytes{0x89, 'P', 'N', 'G', 0, 1, 2}}};
        CHECK_ERROR_KIND(build_sprite(icons), ErrorKind::UndecodableImage);
    }

    TEST_CASE("no icons") {
        const auto bundle = build_sprite(std::vector<std::pair<std::string, Image>>{});
        CHECK(bundle.atlas.empty());
        CHECK(bundle.index_json().dump() == "{}");
    }
}
