#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace depthlayers {

// Writes to a sibling temporary file and renames it over `path`, so readers see
// either the old contents or the complete new ones.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace depthlayers
