#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace scd {

// Lowercase 64-hex-char SHA-256 digests.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace scd
