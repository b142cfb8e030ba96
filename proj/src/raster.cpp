#include "monofly/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace monofly {

static_assert(std::endian::native == std::endian::little,
              "raster I/O assumes a little-endian host");

void validate(const GrayImage& image) {
  for (double v : image.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "gray value outside [0, 1]");
    }
  }
}

void validate(const DisparityMap& disparity) {
  for (double v : disparity.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "disparity must be finite and nonnegative");
    }
  }
}

void validate(const DepthMap& depth) {
  for (double v : depth.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "depth must be finite and positive");
    }
  }
}

namespace {

constexpr std::string_view kDisparityMagic = "DISP";
constexpr std::string_view kDepthMagic = "DMAP";
constexpr std::size_t kHeaderSize = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

template <class Tag>
std::vector<std::uint8_t> encode(const Raster<Tag>& map, std::string_view magic) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * map.size());
  out.insert(out.end(), magic.begin(), magic.end());
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  for (double v : map.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    put_u32(out, bits);
  }
  return out;
}

template <class Tag>
Raster<Tag> decode(std::span<const std::uint8_t> bytes, std::string_view magic) {
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::IoError, "truncated raster header");
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw Error(ErrorCode::IoError, "bad raster magic, expected " + std::string(magic));
  }
  const std::uint32_t width = get_u32(bytes, 4);
  const std::uint32_t height = get_u32(bytes, 8);
  const std::uint64_t count = static_cast<std::uint64_t>(width) * height;
  if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20)) {
    throw Error(ErrorCode::IoError, "implausible raster dimensions");
  }
  if (bytes.size() != kHeaderSize + 4 * count) {
    throw Error(ErrorCode::IoError, "raster payload size does not match header");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * i));
  }
  return Raster<Tag>(static_cast<int>(width), static_cast<int>(height), std::move(values));
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const DisparityMap& map) {
  return encode(map, kDisparityMagic);
}
std::vector<std::uint8_t> encode_raster(const DepthMap& map) { return encode(map, kDepthMagic); }

DisparityMap decode_disparity(std::span<const std::uint8_t> bytes) {
  return decode<DisparityTag>(bytes, kDisparityMagic);
}
DepthMap decode_depth(std::span<const std::uint8_t> bytes) {
  return decode<DepthTag>(bytes, kDepthMagic);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_disparity(const std::filesystem::path& path, const DisparityMap& map) {
  write_file_bytes(path, encode_raster(map));
}
void write_depth(const std::filesystem::path& path, const DepthMap& map) {
  write_file_bytes(path, encode_raster(map));
}
DisparityMap read_disparity(const std::filesystem::path& path) {
  return decode_disparity(read_file_bytes(path));
}
DepthMap read_depth(const std::filesystem::path& path) {
  return decode_depth(read_file_bytes(path));
}

}  // namespace monofly
