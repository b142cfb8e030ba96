#pragma once

// Reference computations for the tests. Each one is written from scratch and
// shares no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Geometry>

#include "monofly/camera_geometry.hpp"
#include "monofly/raster.hpp"

namespace oracle {

using monofly::Vec2;
using monofly::Vec3;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Random rotation from a normalized Gaussian quaternion.
inline monofly::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// Pinhole projection written out component by component.
inline Vec2 project(const monofly::CameraIntrinsics& k, const monofly::Mat3& r, const Vec3& t,
                    const Vec3& world) {
  const Vec3 c = r * world + t;
  return {k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy};
}

// Dense 3D grid of blocked flags, x fastest.
struct Grid3 {
  int nx, ny, nz;
  std::vector<char> blocked;
  int index(int x, int y, int z) const { return (z * ny + y) * nx + x; }
  bool inside(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
};

// Shortest path lengths (in cells) from `source` with unit face moves
// (connectivity 6) or with face, edge and corner moves costing 1, sqrt2 and
// sqrt3 (connectivity 26).
inline std::vector<double> dijkstra(const Grid3& g, int sx, int sy, int sz, int connectivity) {
  std::vector<double> dist(g.blocked.size(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[g.index(sx, sy, sz)] = 0.0;
  open.push({0.0, g.index(sx, sy, sz)});
  while (!open.empty()) {
    auto [d, i] = open.top();
    open.pop();
    if (d > dist[i]) continue;
    const int x = i % g.nx;
    const int y = (i / g.nx) % g.ny;
    const int z = i / (g.nx * g.ny);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int order = std::abs(dx) + std::abs(dy) + std::abs(dz);
          if (order == 0 || (connectivity == 6 && order > 1)) continue;
          const int X = x + dx, Y = y + dy, Z = z + dz;
          if (!g.inside(X, Y, Z) || g.blocked[g.index(X, Y, Z)]) continue;
          const double nd = d + std::sqrt(static_cast<double>(order));
          const int j = g.index(X, Y, Z);
          if (nd < dist[j]) {
            dist[j] = nd;
            open.push({nd, j});
          }
        }
      }
    }
  }
  return dist;
}

// Exhaustive scan: the candidate center in [x0, x1] x [y0, y1] minimizing the
// distance between unit-normalized patches, first in row-major order. Flat
// candidates are skipped.
inline std::pair<monofly::Pixel, double> exhaustive_patch_scan(const monofly::GrayImage& left,
                                                               const monofly::GrayImage& right,
                                                               monofly::Pixel at, int window,
                                                               int x0, int x1, int y0, int y1) {
  const int h = window / 2;
  std::vector<double> tpl;
  for (int dy = -h; dy <= h; ++dy) {
    for (int dx = -h; dx <= h; ++dx) tpl.push_back(left.at(at.x + dx, at.y + dy));
  }
  double tn = 0.0;
  for (double v : tpl) tn += v * v;
  tn = std::sqrt(tn);
  std::pair<monofly::Pixel, double> best{{-1, -1}, kInf};
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      std::vector<double> w;
      for (int dy = -h; dy <= h; ++dy) {
        for (int dx = -h; dx <= h; ++dx) w.push_back(right.at(x + dx, y + dy));
      }
      double wn = 0.0;
      for (double v : w) wn += v * v;
      wn = std::sqrt(wn);
      if (wn == 0.0) continue;
      double d2 = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double e = tpl[i] / tn - w[i] / wn;
        d2 += e * e;
      }
      const double d = std::sqrt(d2);
      if (d < best.second) best = {{x, y}, d};
    }
  }
  return best;
}

// Ray / axis-aligned box entry by testing each of the six faces on its own.
inline std::optional<double> ray_box_faces(const Vec3& o, const Vec3& d, const Vec3& lo,
                                           const Vec3& hi) {
  std::optional<double> best;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) continue;
    for (double plane : {lo[axis], hi[axis]}) {
      const double t = (plane - o[axis]) / d[axis];
      if (!(t > 0.0)) continue;
      const Vec3 p = o + t * d;
      bool on_face = true;
      for (int a = 0; a < 3; ++a) {
        if (a == axis) continue;
        if (p[a] < lo[a] - 1e-9 || p[a] > hi[a] + 1e-9) on_face = false;
      }
      if (on_face && (!best || t < *best)) best = t;
    }
  }
  return best;
}

}  // namespace oracle
