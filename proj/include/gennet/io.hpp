#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gennet {

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a partially written file.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace gennet
