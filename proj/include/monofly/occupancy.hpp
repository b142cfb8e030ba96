#pragma once

// Ego-centric binary voxel grid in the vehicle body frame
// (x right, y forward, z up).

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "monofly/camera_geometry.hpp"
#include "monofly/raster.hpp"

namespace monofly {

struct PointCloud {
  std::vector<Vec3> points;
};

struct CellIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

inline constexpr double kDefaultResolution = 0.25;
inline constexpr double kDefaultRadius = 4.0;
inline constexpr int kDefaultPadCells = 1;
inline constexpr int kDefaultStride = 4;

// Cells cover [c*res, (c+1)*res) per axis. Horizontally the grid spans
// ceil(2*radius/res) cells on x (centered on the vehicle) and on y (starting
// at the vehicle and extending forward), so the vehicle sits at the
// bottom-center cell of a bird's-eye slice. Vertically it spans the same
// count, centered on the vehicle.
class OccupancyGrid {
 public:
  OccupancyGrid(double resolution, double radius);

  double resolution() const { return resolution_; }
  double radius() const { return radius_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  std::size_t size() const { return flags_.size(); }

  bool contains(CellIndex c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < nx_ && c.y < ny_ && c.z < nz_;
  }
  std::size_t linear(CellIndex c) const {
    return (static_cast<std::size_t>(c.z) * static_cast<std::size_t>(ny_) +
            static_cast<std::size_t>(c.y)) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(c.x);
  }
  CellIndex cell(std::size_t linear_index) const;

  // Cell holding a body-frame point, if it lies in the grid.
  std::optional<CellIndex> cell_of(const Vec3& body) const;
  Vec3 cell_center(CellIndex c) const;
  // Body-frame box spanned by the grid: [lower, upper).
  Vec3 lower() const;
  Vec3 upper() const;
  Vec3 center() const { return 0.5 * (lower() + upper()); }
  CellIndex vehicle_cell() const { return {-origin_.x, -origin_.y, -origin_.z}; }

  bool occupied(CellIndex c) const { return flags_[linear(c)] != 0; }
  void set(CellIndex c, bool value = true) { flags_[linear(c)] = value ? 1 : 0; }
  std::span<const std::uint8_t> flags() const { return flags_; }
  std::span<std::uint8_t> flags() { return flags_; }
  std::size_t occupied_count() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  double resolution_;
  double radius_;
  int nx_, ny_, nz_;
  CellIndex origin_;  // integer cell coordinate of grid index (0, 0, 0)
  std::vector<std::uint8_t> flags_;
};

// Back-projects every `stride`-th pixel to the body frame. Pixels whose depth
// is at or above `clamp_depth` carry no surface and are skipped unless
// `keep_clamped` is set.
PointCloud depth_to_pointcloud(const DepthMap& depth, const CameraIntrinsics& intrinsics,
                               int stride = kDefaultStride,
                               double clamp_depth = std::numeric_limits<double>::infinity(),
                               bool keep_clamped = false);

OccupancyGrid bin_points(const PointCloud& cloud, double resolution, double radius);

// Binary dilation with a (2*pad+1)^3 cube.
OccupancyGrid pad_obstacles(const OccupancyGrid& grid, int pad_cells);

// Portable graymap of one z-layer, viewed from above with forward (+y) up:
// 0 free, 255 occupied.
std::vector<std::uint8_t> encode_slice_pgm(const OccupancyGrid& grid, int z_layer);

// Portable pixmap of one z-layer: occupied cells in the green channel, path
// cells (projected along z) in the red channel.
std::vector<std::uint8_t> encode_path_ppm(const OccupancyGrid& grid, int z_layer,
                                          std::span<const CellIndex> path);

// 8-bit graymap of a depth map, near = bright, linear over [0, max_depth].
std::vector<std::uint8_t> encode_depth_pgm(const DepthMap& depth, double max_depth);

}  // namespace monofly
