#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace rfa {

/// 64-bit FNV-1a; stable across platforms, used for cache keys.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string base64_encode(std::string_view bytes);
/// Throws a format error on characters outside the standard alphabet.
std::string base64_decode(std::string_view text);

}  // namespace rfa
