#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace duel {

/// Writes `contents` to a sibling temporary file and renames it over `path`, so readers never
/// observe a truncated file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for config fingerprints in run manifests.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace duel
