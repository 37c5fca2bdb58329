#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nftaudit {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);

std::vector<std::string> split(std::string_view s, char sep);

// 1234567 -> "1,234,567"; locale-independent.
std::string format_with_separators(std::uint64_t n);

std::uint64_t fnv1a64(std::string_view s);

// Maps a 64-bit hash onto [0, 1).
double hash_to_unit(std::uint64_t h);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames, so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace nftaudit
