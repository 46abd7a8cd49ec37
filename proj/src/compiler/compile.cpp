#include <cctype>
#include <set>

#include "cartoforge/compiler/compiler.hpp"

namespace cartoforge::compiler {

using style::Category;

std::string slug(std::string_view element_name) {
    std::string out;
    out.reserve(element_name.size());
    for (char c : element_name) {
        if (c == ' ') {
            out.push_back('-');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

std::string layer_id(Category category, std::string_view element_name) {
    if (category == Category::background) return "background";
    return std::string(style::to_string(category)) + "-" + slug(element_name);
}

std::string element_key(Category category, std::string_view element_name) {
    return std::string(style::to_string(category)) + ":" + std::string(element_name);
}

std::string geojson_file_name(Category category, std::string_view element_name) {
    return layer_id(category, element_name) + ".geojson";
}

SourceConfig SourceConfig::for_manifest(const style::LayerManifest& manifest, SourceKind kind) {
    SourceConfig out;
    out.kind = kind;
    for (Category c : style::kElementCategories) {
        for (const auto& name : manifest.elements(c)) {
            out.bindings[element_key(c, name)] =
                kind == SourceKind::inline_geojson ? geojson_file_name(c, name) : layer_id(c, name);
        }
    }
    return out;
}

std::string CompiledStyle::serialize() const {
    return document.dump(2) + "\n";
}

CompiledStyle CompiledStyle::from_document(ordered_json document) {
    CompiledStyle out;
    out.document = std::move(document);
    const auto layers = out.document.find("layers");
    if (layers == out.document.end() || !layers->is_array()) return out;
    for (const auto& layer : *layers) {
        if (!layer.is_object() || !layer.contains("id") || !layer["id"].is_string()) continue;
        const std::string id = layer["id"].get<std::string>();
        if (id == "background" && layer.value("type", "") == "background") {
            out.layer_index[element_key(Category::background, "background")] = id;
            continue;
        }
        const auto meta = layer.find("metadata");
        if (meta == layer.end() || !meta->is_object()) continue;
        const auto cat = meta->find("cartoforge:category");
        const auto elem = meta->find("cartoforge:element");
        if (cat == meta->end() || elem == meta->end() || !cat->is_string() || !elem->is_string()) continue;
        out.layer_index[cat->get<std::string>() + ":" + elem->get<std::string>()] = id;
    }
    return out;
}

namespace {

struct Binder {
    const SourceConfig& src;

    std::string source_for(Category c, const std::string& name) const {
        return src.kind == SourceKind::vector_tileset ? src.source_id : src.source_id + "-" + layer_id(c, name);
    }

    const std::string& binding(Category c, const std::string& name) const {
        const auto it = src.bindings.find(element_key(c, name));
        if (it == src.bindings.end()) {
            throw Error(ErrorKind::SourceBindingMissing, "no source binding for " + element_key(c, name));
        }
        return it->second;
    }

    void bind_layer(ordered_json& layer, Category c, const std::string& name) const {
        const auto& b = binding(c, name);
        layer["source"] = source_for(c, name);
        if (src.kind == SourceKind::vector_tileset) layer["source-layer"] = b;
    }

    ordered_json sources(const style::LayerManifest& manifest) const {
        ordered_json out = ordered_json::object();
        if (src.kind == SourceKind::vector_tileset) {
            out[src.source_id] = {{"type", "vector"}, {"url", src.tileset_url}};
            for (Category c : style::kElementCategories)
                for (const auto& name : manifest.elements(c)) binding(c, name);
            return out;
        }
        for (Category c : {Category::fill, Category::line, Category::icon, Category::label}) {
            for (const auto& name : manifest.elements(c)) {
                out[source_for(c, name)] = {{"type", "geojson"}, {"data", src.data_prefix + binding(c, name)}};
            }
        }
        return out;
    }
};

ordered_json element_layer(Category c, const std::string& name, const std::string& type) {
    ordered_json layer;
    layer["id"] = layer_id(c, name);
    layer["type"] = type;
    return layer;
}

void add_metadata(ordered_json& layer, Category c, const std::string& name) {
    layer["metadata"] = {{"cartoforge:category", std::string(style::to_string(c))}, {"cartoforge:element", name}};
}

void check_slugs(const style::StyleSheet& sheet) {
    for (Category c : style::kElementCategories) {
        std::set<std::string> seen;
        for (const auto& name : sheet.names(c)) {
            if (!seen.insert(slug(name)).second) {
                throw Error(ErrorKind::SchemaViolation,
                            std::string(style::to_string(c)) + " elements collide on layer id " + layer_id(c, name));
            }
        }
    }
}

}  // namespace

CompiledStyle compile(const style::StyleSheet& sheet, const style::LayerManifest& manifest, const SourceConfig& src,
                      const CompileOptions& options) {
    const auto report = style::validate_completeness(sheet, manifest);
    if (!report.complete()) {
        throw Error(ErrorKind::IncompleteSheet, "stylesheet does not match the manifest: " + report.describe());
    }
    check_slugs(sheet);
    const Binder binder{src};

    ordered_json doc;
    doc["version"] = 8;
    doc["name"] = options.name;
    doc["sources"] = binder.sources(manifest);
    if (!sheet.icons.empty() && !options.sprite_url.empty()) doc["sprite"] = options.sprite_url;
    if (!sheet.labels.empty() && !options.glyphs_url.empty()) doc["glyphs"] = options.glyphs_url;

    ordered_json layers = ordered_json::array();
    ordered_json bg;
    bg["id"] = "background";
    bg["type"] = "background";
    bg["paint"] = {{"background-color", sheet.background.background_color.hex()}};
    layers.push_back(std::move(bg));

    auto bound = [&](Category c, const std::string& name, const std::string& type) {
        ordered_json layer = element_layer(c, name, type);
        binder.bind_layer(layer, c, name);
        add_metadata(layer, c, name);
        return layer;
    };

    for (const auto& [name, fill] : sheet.fills) {
        auto layer = bound(Category::fill, name, "fill");
        layer["paint"] = {{"fill-color", fill.fill_color.hex()},
                          {"fill-opacity", fill.fill_opacity.value()},
                          {"fill-outline-color", fill.fill_outline_color.hex()}};
        layers.push_back(std::move(layer));
    }
    for (const auto& [name, line] : sheet.lines) {
        auto layer = bound(Category::line, name, "line");
        layer["paint"] = {{"line-color", line.line_color.hex()}, {"line-opacity", line.line_opacity.value()}};
        layers.push_back(std::move(layer));
    }
    for (const auto& [name, icon] : sheet.icons) {
        auto layer = bound(Category::icon, name, "symbol");
        layer["layout"] = {{"icon-image", slug(name)}};
        layers.push_back(std::move(layer));
    }
    for (const auto& [name, label] : sheet.labels) {
        auto layer = bound(Category::label, name, "symbol");
        layer["layout"] = {{"text-field", ordered_json::array({"get", options.label_field})}};
        layer["paint"] = {{"text-color", label.text_color.hex()},
                          {"text-halo-color", label.text_halo_color.hex()},
                          {"text-halo-width", 1}};
        layers.push_back(std::move(layer));
    }
    doc["layers"] = std::move(layers);
    return CompiledStyle::from_document(std::move(doc));
}

void rebind_sources(ordered_json& document, const style::LayerManifest& manifest, const SourceConfig& src) {
    const Binder binder{src};
    document["sources"] = binder.sources(manifest);
    if (!document.contains("layers") || !document["layers"].is_array()) return;
    std::map<std::string, std::pair<Category, std::string>> by_id;
    for (Category c : style::kElementCategories)
        for (const auto& name : manifest.elements(c)) by_id.emplace(layer_id(c, name), std::pair{c, name});
    for (auto& layer : document["layers"]) {
        if (!layer.is_object() || !layer.contains("id") || !layer["id"].is_string()) continue;
        const auto it = by_id.find(layer["id"].get<std::string>());
        if (it == by_id.end()) continue;
        layer.erase("source-layer");
        binder.bind_layer(layer, it->second.first, it->second.second);
        add_metadata(layer, it->second.first, it->second.second);
    }
}

}  // namespace cartoforge::compiler
