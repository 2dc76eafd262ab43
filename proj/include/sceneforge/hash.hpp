#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sceneforge {

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::vector<std::uint8_t>& data);
std::string sha256_file(const std::filesystem::path& path);

} // namespace sceneforge
