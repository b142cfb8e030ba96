#include "monofly/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace monofly {

OccupancyGrid::OccupancyGrid(double resolution, double radius)
    : resolution_(resolution), radius_(radius) {
  if (!(resolution > 0.0) || !(radius >= resolution)) {
    throw Error(ErrorCode::InvalidArgument, "grid needs resolution > 0 and radius >= resolution");
  }
  const int n = static_cast<int>(std::ceil(2.0 * radius / resolution - 1e-9));
  nx_ = ny_ = nz_ = n;
  origin_ = {-(n / 2), 0, -(n / 2)};
  flags_.assign(static_cast<std::size_t>(n) * n * n, 0);
}

CellIndex OccupancyGrid::cell(std::size_t linear_index) const {
  const auto nx = static_cast<std::size_t>(nx_);
  const auto ny = static_cast<std::size_t>(ny_);
  return {static_cast<int>(linear_index % nx), static_cast<int>((linear_index / nx) % ny),
          static_cast<int>(linear_index / (nx * ny))};
}

std::optional<CellIndex> OccupancyGrid::cell_of(const Vec3& body) const {
  if (!body.allFinite()) return std::nullopt;
  const auto axis = [&](double v, int origin) {
    return static_cast<long long>(std::floor(v / resolution_)) - origin;
  };
  const long long ix = axis(body.x(), origin_.x);
  const long long iy = axis(body.y(), origin_.y);
  const long long iz = axis(body.z(), origin_.z);
  if (ix < 0 || iy < 0 || iz < 0 || ix >= nx_ || iy >= ny_ || iz >= nz_) return std::nullopt;
  return CellIndex{static_cast<int>(ix), static_cast<int>(iy), static_cast<int>(iz)};
}

Vec3 OccupancyGrid::cell_center(CellIndex c) const {
  return Vec3((c.x + origin_.x + 0.5) * resolution_, (c.y + origin_.y + 0.5) * resolution_,
              (c.z + origin_.z + 0.5) * resolution_);
}

Vec3 OccupancyGrid::lower() const {
  return Vec3(origin_.x, origin_.y, origin_.z) * resolution_;
}

Vec3 OccupancyGrid::upper() const {
  return Vec3(origin_.x + nx_, origin_.y + ny_, origin_.z + nz_) * resolution_;
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

PointCloud depth_to_pointcloud(const DepthMap& depth, const CameraIntrinsics& intrinsics,
                               int stride, double clamp_depth, bool keep_clamped) {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  PointCloud cloud;
  for (int v = 0; v < depth.height(); v += stride) {
    for (int u = 0; u < depth.width(); u += stride) {
      const double z = depth.at(u, v);
      if (!(z < clamp_depth) && !keep_clamped) continue;
      // Camera forward is body +y, camera down is body -z.
      cloud.points.emplace_back(z * (u - intrinsics.cx) / intrinsics.fx, z,
                                z * (intrinsics.cy - v) / intrinsics.fy);
    }
  }
  return cloud;
}

OccupancyGrid bin_points(const PointCloud& cloud, double resolution, double radius) {
  OccupancyGrid grid(resolution, radius);
  for (const auto& p : cloud.points) {
    if (const auto c = grid.cell_of(p)) grid.set(*c);
  }
  return grid;
}

OccupancyGrid pad_obstacles(const OccupancyGrid& grid, int pad_cells) {
  if (pad_cells < 0) throw Error(ErrorCode::InvalidArgument, "pad must be nonnegative");
  OccupancyGrid out = grid;
  if (pad_cells == 0) return out;

  // A Chebyshev cube is separable: dilate along x, then y, then z.
  const int dims[3] = {grid.nx(), grid.ny(), grid.nz()};
  const std::size_t strides[3] = {1, static_cast<std::size_t>(grid.nx()),
                                  static_cast<std::size_t>(grid.nx()) * grid.ny()};
  std::vector<std::uint8_t> src(out.flags().begin(), out.flags().end());
  std::vector<std::uint8_t> dst(src.size());
  for (int axis = 0; axis < 3; ++axis) {
    const int n = dims[axis];
    const std::size_t stride = strides[axis];
    for (std::size_t i = 0; i < src.size(); ++i) {
      const int coord = static_cast<int>((i / stride) % static_cast<std::size_t>(n));
      const int lo = std::max(0, coord - pad_cells);
      const int hi = std::min(n - 1, coord + pad_cells);
      const std::size_t base = i - static_cast<std::size_t>(coord) * stride;
      std::uint8_t v = 0;
      for (int c = lo; c <= hi && !v; ++c) v = src[base + static_cast<std::size_t>(c) * stride];
      dst[i] = v;
    }
    src.swap(dst);
  }
  std::copy(src.begin(), src.end(), out.flags().begin());
  return out;
}

namespace {

std::vector<std::uint8_t> netpbm_header(const char* magic, int width, int height) {
  const std::string header = std::string(magic) + "\n" + std::to_string(width) + " " +
                             std::to_string(height) + "\n255\n";
  return {header.begin(), header.end()};
}

}  // namespace

std::vector<std::uint8_t> encode_slice_pgm(const OccupancyGrid& grid, int z_layer) {
  if (z_layer < 0 || z_layer >= grid.nz()) throw Error(ErrorCode::InvalidArgument, "bad z layer");
  auto out = netpbm_header("P5", grid.nx(), grid.ny());
  for (int row = 0; row < grid.ny(); ++row) {
    const int y = grid.ny() - 1 - row;
    for (int x = 0; x < grid.nx(); ++x) {
      out.push_back(grid.occupied({x, y, z_layer}) ? 255 : 0);
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_path_ppm(const OccupancyGrid& grid, int z_layer,
                                          std::span<const CellIndex> path) {
  if (z_layer < 0 || z_layer >= grid.nz()) throw Error(ErrorCode::InvalidArgument, "bad z layer");
  std::vector<std::uint8_t> on_path(static_cast<std::size_t>(grid.nx()) * grid.ny(), 0);
  for (const auto& c : path) {
    if (grid.contains(c)) on_path[static_cast<std::size_t>(c.y) * grid.nx() + c.x] = 1;
  }
  auto out = netpbm_header("P6", grid.nx(), grid.ny());
  for (int row = 0; row < grid.ny(); ++row) {
    const int y = grid.ny() - 1 - row;
    for (int x = 0; x < grid.nx(); ++x) {
      out.push_back(on_path[static_cast<std::size_t>(y) * grid.nx() + x] ? 255 : 0);
      out.push_back(grid.occupied({x, y, z_layer}) ? 255 : 0);
      out.push_back(0);
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_depth_pgm(const DepthMap& depth, double max_depth) {
  if (!(max_depth > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_depth must be positive");
  auto out = netpbm_header("P5", depth.width(), depth.height());
  for (double z : depth.values()) {
    const double t = std::clamp(1.0 - z / max_depth, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * t)));
  }
  return out;
}

}  // namespace monofly
