#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "monofly/error.hpp"

namespace monofly {

// Integer pixel location; ordering is row-major (y first, then x).
struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel& a, const Pixel& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

// Dense row-major raster of doubles. The tag keeps gray images, disparity
// maps and depth maps from being mixed up.
template <class Tag>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
    }
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<double> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width <= 0 || height <= 0 ||
        values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error(ErrorCode::InvalidArgument, "raster size does not match its dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool contains(Pixel p) const { return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  double& at(int x, int y) { return values_[index(x, y)]; }
  double at(int x, int y) const { return values_[index(x, y)]; }
  double& operator[](Pixel p) { return at(p.x, p.y); }
  double operator[](Pixel p) const { return at(p.x, p.y); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

struct GrayTag {};
struct DisparityTag {};
struct DepthTag {};

using GrayImage = Raster<GrayTag>;        // luminance in [0, 1]
using DisparityMap = Raster<DisparityTag>; // nonnegative, relative scale
using DepthMap = Raster<DepthTag>;         // meters, positive

void validate(const GrayImage& image);
void validate(const DisparityMap& disparity);
void validate(const DepthMap& depth);

// Little-endian binary: 4-byte magic, u32 width, u32 height, then
// width*height float32 values in row-major order. Values are narrowed to
// float32 on write; reading and re-writing a file reproduces it exactly.
std::vector<std::uint8_t> encode_raster(const DisparityMap& map);
std::vector<std::uint8_t> encode_raster(const DepthMap& map);
DisparityMap decode_disparity(std::span<const std::uint8_t> bytes);
DepthMap decode_depth(std::span<const std::uint8_t> bytes);

void write_disparity(const std::filesystem::path& path, const DisparityMap& map);
void write_depth(const std::filesystem::path& path, const DepthMap& map);
DisparityMap read_disparity(const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace monofly
