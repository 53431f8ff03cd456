#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace aggregame::io {

/// Round-trip decimal form ("%.17g").
std::string format_number(double value);

/// Writes `contents` to a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace aggregame::io
