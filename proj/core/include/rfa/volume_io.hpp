#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "rfa/grid.hpp"

namespace rfa {

/// Volume container, all fields little-endian:
///
///   offset  size  field
///   0       4     magic "RFAV"
///   4       2     version (u16, currently 1)
///   6       1     dtype (0 = u8 mask/labels, 1 = f32)
///   7       12    dims, 3 x u32
///   19      12    spacing mm, 3 x f32
///   31      12    origin mm, 3 x f32
///   43      ...   payload, row-major, x fastest
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 43;

enum class VolumeDtype : std::uint8_t { kU8 = 0, kF32 = 1 };

std::string encode_volume(const Volume<std::uint8_t>& volume);
/// Values are stored as f32.
std::string encode_volume(const ScalarVolume& volume);

using AnyVolume = std::variant<Volume<std::uint8_t>, ScalarVolume>;

/// Throws ErrorKind::kFormat naming the failing byte offset.
AnyVolume decode_volume(std::string_view bytes);
Volume<std::uint8_t> decode_u8_volume(std::string_view bytes);
ScalarVolume decode_f32_volume(std::string_view bytes);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const Volume<std::uint8_t>& volume);
void write_volume(const std::filesystem::path& path, const ScalarVolume& volume);
Volume<std::uint8_t> read_u8_volume(const std::filesystem::path& path);
ScalarVolume read_f32_volume(const std::filesystem::path& path);

}  // namespace rfa
