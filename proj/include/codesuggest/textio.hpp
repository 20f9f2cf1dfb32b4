#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace codesuggest {

// Backslash escaping used by every line/tab oriented file format here:
// \t, \n, \r and \\ are written as two-character escapes.
std::string escape_field(std::string_view text);
std::string unescape_field(std::string_view text);

std::vector<std::string_view> split_tabs(std::string_view line);
std::vector<std::string> split_ws(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace codesuggest
