#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace scenecast::io {

/// Writes to a sibling temporary file and renames it over `path`, so a
/// failed run never leaves a partial output behind.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace scenecast::io
