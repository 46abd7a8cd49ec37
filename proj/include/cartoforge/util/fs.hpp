#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cartoforge/util/digest.hpp"

namespace cartoforge::util {

Bytes read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, creating parent
/// directories as needed. Readers never observe a half-written file.
void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_atomic(const std::filesystem::path& path, std::string_view text);

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view prefix = "cartoforge");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace cartoforge::util
