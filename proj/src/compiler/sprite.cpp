#include "cartoforge/compiler/compiler.hpp"

namespace cartoforge::compiler {

ordered_json SpriteBundle::index_json() const {
    ordered_json out = ordered_json::object();
    for (const auto& [name, e] : index) {
        out[name] = {{"x", e.x}, {"y", e.y}, {"width", e.width}, {"height", e.height}, {"pixelRatio", e.pixel_ratio}};
    }
    return out;
}

util::Bytes SpriteBundle::atlas_png() const {
    if (atlas.empty()) throw Error(ErrorKind::InvalidArgument, "sprite has no icons");
    return encode_png(atlas);
}

SpriteBundle build_sprite(const std::vector<std::pair<std::string, Image>>& icons) {
    SpriteBundle out;
    if (icons.empty()) return out;
    const int rows = (static_cast<int>(icons.size()) + kSpriteColumns - 1) / kSpriteColumns;
    out.atlas = Image(kSpriteAtlasWidth, rows * kSpriteIconSize);
    for (std::size_t i = 0; i < icons.size(); ++i) {
        const auto& [name, image] = icons[i];
        const std::string key = slug(name);
        for (const auto& [existing, _] : out.index) {
            if (existing == key) throw Error(ErrorKind::SchemaViolation, "icons collide on sprite name " + key);
        }
        if (image.empty()) throw Error(ErrorKind::UndecodableImage, "icon \"" + name + "\" is empty");
        const Image scaled = image.width() == kSpriteIconSize && image.height() == kSpriteIconSize
                                 ? image
                                 : resample(image, kSpriteIconSize, kSpriteIconSize);
        SpriteEntry e;
        e.x = static_cast<int>(i % kSpriteColumns) * kSpriteIconSize;
        e.y = static_cast<int>(i / kSpriteColumns) * kSpriteIconSize;
        e.width = kSpriteIconSize;
        e.height = kSpriteIconSize;
        for (int y = 0; y < kSpriteIconSize; ++y)
            for (int x = 0; x < kSpriteIconSize; ++x) out.atlas.set(e.x + x, e.y + y, scaled.at(x, y));
        out.index.emplace_back(key, e);
    }
    return out;
}

SpriteBundle build_sprite(const std::vector<std::pair<std::string, util::Bytes>>& icons) {
    std::vector<std::pair<std::string, Image>> decoded;
    decoded.reserve(icons.size());
    for (const auto& [name, bytes] : icons) {
        try {
            decoded.emplace_back(name, decode_image(bytes));
        } catch (const Error& e) {
            throw Error(ErrorKind::UndecodableImage, "icon \"" + name + "\": " + e.what());
        }
    }
    return build_sprite(decoded);
}

}  // namespace cartoforge::compiler
