#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridbank {

using Hash256 = std::array<std::uint8_t, 32>;
using Bytes = std::vector<std::uint8_t>;

Hash256 sha256(std::span<const std::uint8_t> data);
Hash256 sha256(std::string_view data);

std::string hex_encode(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text); // throws BadMessage

/// Source of entropy for key and hash-chain generation. The default draws
/// from the OS; the harness substitutes a seeded generator so scenario runs
/// are reproducible.
using RandomSource = std::function<void(std::span<std::uint8_t>)>;

RandomSource os_random();
RandomSource seeded_random(std::uint64_t seed);

} // namespace gridbank
