#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pktclass {

using Digest256 = std::array<uint8_t, 32>;

Digest256 sha256(std::span<const uint8_t> data);
Digest256 sha256_file(const std::filesystem::path& path);

std::string hex_encode(std::span<const uint8_t> data);
std::vector<uint8_t> hex_decode(const std::string& hex);

}  // namespace pktclass
