#include <map>
#include <set>

#include "cartoforge/compiler/compiler.hpp"

namespace cartoforge::compiler {

namespace {

using json = nlohmann::json;
using Names = std::set<std::string, std::less<>>;

struct TypeTable {
    Names paint;
    Names layout;
};

const std::map<std::string, TypeTable, std::less<>>& type_tables() {
    static const std::map<std::string, TypeTable, std::less<>> tables = {
        {"background",
         {{"background-color", "background-opacity", "background-pattern", "background-emissive-strength"},
          {"visibility"}}},
        {"fill",
         {{"fill-antialias", "fill-color", "fill-opacity", "fill-outline-color", "fill-pattern", "fill-translate",
           "fill-translate-anchor", "fill-emissive-strength"},
          {"fill-sort-key", "visibility"}}},
        {"line",
         {{"line-blur", "line-color", "line-dasharray", "line-gap-width", "line-gradient", "line-offset",
           "line-opacity", "line-pattern", "line-translate", "line-translate-anchor", "line-width",
           "line-emissive-strength"},
          {"line-cap", "line-join", "line-miter-limit", "line-round-limit", "line-sort-key", "visibility"}}},
        {"symbol",
         {{"icon-color", "icon-halo-blur", "icon-halo-color", "icon-halo-width", "icon-opacity", "icon-translate",
           "icon-translate-anchor", "text-color", "text-halo-blur", "text-halo-color", "text-halo-width",
           "text-opacity", "text-translate", "text-translate-anchor"},
          {"icon-allow-overlap", "icon-anchor", "icon-ignore-placement", "icon-image", "icon-keep-upright",
           "icon-offset", "icon-optional", "icon-padding", "icon-pitch-alignment", "icon-rotate",
           "icon-rotation-alignment", "icon-size", "icon-text-fit", "icon-text-fit-padding", "symbol-avoid-edges",
           "symbol-placement", "symbol-sort-key", "symbol-spacing", "symbol-z-order", "text-allow-overlap",
           "text-anchor", "text-field", "text-font", "text-ignore-placement", "text-justify", "text-keep-upright",
           "text-letter-spacing", "text-line-height", "text-max-angle", "text-max-width", "text-offset",
           "text-optional", "text-padding", "text-pitch-alignment", "text-radial-offset", "text-rotate",
           "text-rotation-alignment", "text-size", "text-transform", "text-variable-anchor", "text-writing-mode",
           "visibility"}}},
    };
    return tables;
}

/// Layer types the validator knows but does not check property by property.
const Names kOtherTypes = {"circle", "raster", "fill-extrusion", "heatmap", "hillshade", "sky", "model",
                           "raster-particle", "slot", "clip"};

bool ends_with(std::string_view s, std::string_view suffix) { return s.ends_with(suffix); }

class Checker {
public:
    std::vector<Diagnostic> out;

    void add(std::string kind, std::string path, std::string message) {
        out.push_back({std::move(kind), std::move(path), std::move(message)});
    }

    void check_values(const json& props, const std::string& path) {
        for (auto it = props.begin(); it != props.end(); ++it) {
            const std::string& key = it.key();
            const std::string p = path + "." + key;
            const json& v = it.value();
            if (ends_with(key, "-color")) {
                if (v.is_string()) {
                    if (!style::Color::try_parse(v.get<std::string>())) {
                        add("BadColor", p, "\"" + v.get<std::string>() + "\" is not a hex color");
                    }
                } else if (!v.is_array() && !v.is_object()) {
                    add("BadColor", p, "color must be a string");
                }
            } else if (ends_with(key, "-opacity")) {
                if (v.is_number()) {
                    const double d = v.get<double>();
                    if (!(d >= 0.0 && d <= 1.0)) add("BadOpacity", p, "opacity " + v.dump() + " outside [0, 1]");
                } else if (!v.is_array() && !v.is_object()) {
                    add("BadOpacity", p, "opacity must be a number");
                }
            }
        }
    }

    void check_props(const json& layer, const char* group, const Names* allowed, const std::string& path) {
        const auto it = layer.find(group);
        if (it == layer.end()) return;
        const std::string p = path + "." + group;
        if (!it->is_object()) {
            add("MalformedLayer", p, std::string(group) + " must be an object");
            return;
        }
        if (allowed) {
            for (auto prop = it->begin(); prop != it->end(); ++prop) {
                if (!allowed->contains(prop.key())) {
                    add("UnknownProperty", p + "." + prop.key(),
                        "\"" + prop.key() + "\" is not a " + group + " property of " + layer["type"].get<std::string>() +
                            " layers");
                }
            }
        }
        check_values(*it, p);
    }

    void check_layer(const json& layer, std::size_t index, const json* sources, std::set<std::string>& ids) {
        const std::string path = "layers[" + std::to_string(index) + "]";
        if (!layer.is_object()) {
            add("MalformedLayer", path, "layer must be an object");
            return;
        }
        const auto id = layer.find("id");
        if (id == layer.end() || !id->is_string()) {
            add("MalformedLayer", path, "layer has no string id");
        } else if (!ids.insert(id->get<std::string>()).second) {
            add("DuplicateLayerId", path + ".id", "layer id \"" + id->get<std::string>() + "\" repeats");
        }
        const auto type = layer.find("type");
        if (type == layer.end() || !type->is_string()) {
            add("MalformedLayer", path, "layer has no string type");
            return;
        }
        const std::string t = type->get<std::string>();
        const auto table = type_tables().find(t);
        if (table == type_tables().end() && !kOtherTypes.contains(t)) {
            add("UnknownLayerType", path + ".type", "unknown layer type \"" + t + "\"");
            return;
        }
        const TypeTable* tt = table == type_tables().end() ? nullptr : &table->second;
        check_props(layer, "paint", tt ? &tt->paint : nullptr, path);
        check_props(layer, "layout", tt ? &tt->layout : nullptr, path);
        if (t == "background" || t == "sky" || t == "slot") return;
        const auto source = layer.find("source");
        if (source == layer.end() || !source->is_string()) {
            add("MissingSource", path + ".source", "layer names no source");
        } else if (sources && sources->is_object() && !sources->contains(source->get<std::string>())) {
            add("MissingSource", path + ".source", "source \"" + source->get<std::string>() + "\" is not defined");
        }
    }
};

}  // namespace

std::vector<Diagnostic> validate_style(const json& document) {
    Checker c;
    if (!document.is_object()) {
        c.add("MissingRootKey", "", "style document must be an object");
        return c.out;
    }
    const auto version = document.find("version");
    if (version == document.end()) {
        c.add("MissingRootKey", "version", "missing \"version\"");
    } else if (!version->is_number_integer() || version->get<long>() != 8) {
        c.add("BadVersion", "version", "version must be 8, got " + version->dump());
    }
    const json* sources = nullptr;
    if (const auto it = document.find("sources"); it == document.end()) {
        c.add("MissingRootKey", "sources", "missing \"sources\"");
    } else if (!it->is_object()) {
        c.add("MissingRootKey", "sources", "\"sources\" must be an object");
    } else {
        sources = &*it;
    }
    const auto layers = document.find("layers");
    if (layers == document.end() || !layers->is_array()) {
        c.add("MissingRootKey", "layers", "missing \"layers\" array");
        return c.out;
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < layers->size(); ++i) c.check_layer((*layers)[i], i, sources, ids);
    return c.out;
}

std::vector<Diagnostic> check_fidelity(const json& document, const style::StyleSheet& sheet) {
    Checker c;
    std::map<std::string, const json*> by_id;
    if (document.contains("layers") && document["layers"].is_array()) {
        for (const auto& layer : document["layers"]) {
            if (layer.is_object() && layer.contains("id") && layer["id"].is_string()) {
                by_id.emplace(layer["id"].get<std::string>(), &layer);
            }
        }
    }
    auto expect = [&](const std::string& id, const char* group, const char* prop, const json& want) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) return;
        const json& layer = *it->second;
        const std::string path = id + "." + group + "." + prop;
        if (!layer.contains(group) || !layer[group].is_object() || !layer[group].contains(prop)) {
            c.add("ValueMismatch", path, "missing");
            return;
        }
        json got = layer[group][prop];
        if (got.is_string() && want.is_string()) {
            if (const auto col = style::Color::try_parse(got.get<std::string>())) got = col->hex();
        }
        if (got.is_number() && want.is_number() ? got.get<double>() != want.get<double>() : got != want) {
            c.add("ValueMismatch", path, "expected " + want.dump() + ", got " + layer[group][prop].dump());
        }
    };
    auto require = [&](const std::string& id) {
        if (!by_id.contains(id)) c.add("MissingLayer", id, "no layer with id \"" + id + "\"");
    };
    using style::Category;
    require("background");
    expect("background", "paint", "background-color", sheet.background.background_color.hex());
    for (const auto& [name, fill] : sheet.fills) {
        const auto id = layer_id(Category::fill, name);
        require(id);
        expect(id, "paint", "fill-color", fill.fill_color.hex());
        expect(id, "paint", "fill-opacity", fill.fill_opacity.value());
        expect(id, "paint", "fill-outline-color", fill.fill_outline_color.hex());
    }
    for (const auto& [name, line] : sheet.lines) {
        const auto id = layer_id(Category::line, name);
        require(id);
        expect(id, "paint", "line-color", line.line_color.hex());
        expect(id, "paint", "line-opacity", line.line_opacity.value());
    }
    for (const auto& [name, icon] : sheet.icons) {
        const auto id = layer_id(Category::icon, name);
        require(id);
        expect(id, "layout", "icon-image", slug(name));
    }
    for (const auto& [name, label] : sheet.labels) {
        const auto id = layer_id(Category::label, name);
        require(id);
        expect(id, "paint", "text-color", label.text_color.hex());
        expect(id, "paint", "text-halo-color", label.text_halo_color.hex());
    }
    return c.out;
}

nlohmann::ordered_json to_json(const Diagnostic& diagnostic) {
    return {{"kind", diagnostic.kind}, {"path", diagnostic.path}, {"message", diagnostic.message}};
}

}  // namespace cartoforge::compiler
