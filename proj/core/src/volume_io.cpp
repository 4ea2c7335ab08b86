#include "rfa/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rfa {

namespace {

Error format_error(const std::string& what, std::size_t offset) {
  return Error(ErrorKind::kFormat, what + " at offset " + std::to_string(offset));
}

void put_u16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xff);
  out += static_cast<char>(v >> 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out += static_cast<char>((v >> (8 * b)) & 0xff);
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw format_error(std::string("truncated ") + what, bytes_.size());
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto lo = static_cast<std::uint8_t>(bytes_[pos_]), hi = static_cast<std::uint8_t>(bytes_[pos_ + 1]);
    pos_ += 2;
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string_view rest() const { return bytes_.substr(pos_); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_header(std::string& out, const GridSpec& spec, VolumeDtype dtype) {
  out += "RFAV";
  put_u16(out, kContainerVersion);
  out += static_cast<char>(dtype);
  for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(spec.dims[a]));
  for (int a = 0; a < 3; ++a) put_f32(out, static_cast<float>(spec.spacing[a]));
  for (int a = 0; a < 3; ++a) put_f32(out, static_cast<float>(spec.origin[a]));
}

}  // namespace

std::string encode_volume(const Volume<std::uint8_t>& volume) {
  std::string out;
  out.reserve(kContainerHeaderBytes + volume.size());
  put_header(out, volume.spec(), VolumeDtype::kU8);
  out.append(reinterpret_cast<const char*>(volume.values().data()), volume.size());
  return out;
}

std::string encode_volume(const ScalarVolume& volume) {
  std::string out;
  out.reserve(kContainerHeaderBytes + 4 * volume.size());
  put_header(out, volume.spec(), VolumeDtype::kF32);
  for (double v : volume.values()) put_f32(out, static_cast<float>(v));
  return out;
}

AnyVolume decode_volume(std::string_view bytes) {
  Reader in(bytes);
  in.need(4, "header");
  if (bytes.substr(0, 4) != "RFAV") throw format_error("bad magic", 0);
  in.u32("header");
  const std::size_t version_at = in.offset();
  if (const auto version = in.u16("header"); version != kContainerVersion)
    throw format_error("unsupported version " + std::to_string(version), version_at);
  const std::size_t dtype_at = in.offset();
  const auto dtype = in.u8("header");
  if (dtype > 1) throw format_error("unknown dtype " + std::to_string(dtype), dtype_at);

  GridSpec spec;
  for (int a = 0; a < 3; ++a) {
    const std::size_t at = in.offset();
    const auto d = in.u32("header");
    if (d < 3 || d > (1u << 16)) throw format_error("invalid dims", at);
    spec.dims[a] = static_cast<int>(d);
  }
  for (int a = 0; a < 3; ++a) {
    const std::size_t at = in.offset();
    spec.spacing[a] = in.f32("header");
    if (!(spec.spacing[a] > 0.0) || !std::isfinite(spec.spacing[a])) throw format_error("invalid spacing", at);
  }
  for (int a = 0; a < 3; ++a) spec.origin[a] = in.f32("header");

  const std::size_t count = spec.count();
  const std::size_t width = dtype == 0 ? 1 : 4;
  const auto payload = in.rest();
  if (payload.size() < count * width)
    throw format_error("truncated payload (expected " + std::to_string(count * width) + " bytes)", bytes.size());
  if (payload.size() > count * width) throw format_error("trailing bytes", kContainerHeaderBytes + count * width);

  if (dtype == 0) {
    std::vector<std::uint8_t> data(count);
    std::memcpy(data.data(), payload.data(), count);
    return Volume<std::uint8_t>(spec, std::move(data));
  }
  std::vector<double> data(count);
  Reader values(payload);
  for (std::size_t n = 0; n < count; ++n) data[n] = values.f32("payload");
  return ScalarVolume(spec, std::move(data));
}

Volume<std::uint8_t> decode_u8_volume(std::string_view bytes) {
  auto any = decode_volume(bytes);
  if (auto* v = std::get_if<Volume<std::uint8_t>>(&any)) return std::move(*v);
  throw format_error("expected u8 dtype", 6);
}

ScalarVolume decode_f32_volume(std::string_view bytes) {
  auto any = decode_volume(bytes);
  if (auto* v = std::get_if<ScalarVolume>(&any)) return std::move(*v);
  throw format_error("expected f32 dtype", 6);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kInvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_volume(const std::filesystem::path& path, const Volume<std::uint8_t>& volume) {
  write_file_atomic(path, encode_volume(volume));
}

void write_volume(const std::filesystem::path& path, const ScalarVolume& volume) {
  write_file_atomic(path, encode_volume(volume));
}

Volume<std::uint8_t> read_u8_volume(const std::filesystem::path& path) { return decode_u8_volume(read_file(path)); }

ScalarVolume read_f32_volume(const std::filesystem::path& path) { return decode_f32_volume(read_file(path)); }

}  // namespace rfa
