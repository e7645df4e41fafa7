#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace agd::io {

// Shortest-safe round-trip representation: 17 significant digits.
std::string format_double(double x);

// Writes to `<path>.tmp` then renames over `path`, so readers never observe
// a partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace agd::io
