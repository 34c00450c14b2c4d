#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace btlab {

// FIPS 180-4 SHA-256, lowercase hex digest.
std::string sha256_hex(std::span<const unsigned char> data);
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::filesystem::path& file);

}  // namespace btlab
