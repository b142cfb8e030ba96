#pragma once

// First-order Fast Marching solver for |grad T| F = 1 on a regular 3D grid,
// plus goal projection and greedy path extraction for the planner.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "monofly/camera_geometry.hpp"
#include "monofly/occupancy.hpp"

namespace monofly {

inline constexpr double kUnreached = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kCommittedActions = 3;

struct GridShape {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double spacing = 1.0;

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool contains(CellIndex c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < nx && c.y < ny && c.z < nz;
  }
  std::size_t linear(CellIndex c) const {
    return (static_cast<std::size_t>(c.z) * static_cast<std::size_t>(ny) +
            static_cast<std::size_t>(c.y)) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(c.x);
  }
  CellIndex cell(std::size_t i) const {
    const auto sx = static_cast<std::size_t>(nx);
    const auto sy = static_cast<std::size_t>(ny);
    return {static_cast<int>(i % sx), static_cast<int>((i / sx) % sy), static_cast<int>(i / (sx * sy))};
  }
};

// Per-cell propagation speed; zero marks an obstacle.
struct SpeedField {
  GridShape shape;
  std::vector<double> speed;

  SpeedField(GridShape shape, double uniform_speed = 1.0);
  // Free cells get speed 1, occupied cells 0; spacing is the grid resolution.
  static SpeedField from_occupancy(const OccupancyGrid& grid);

  double at(CellIndex c) const { return speed[shape.linear(c)]; }
  double& at(CellIndex c) { return speed[shape.linear(c)]; }
};

struct ArrivalTimeField {
  GridShape shape;
  std::vector<double> time;  // kUnreached where the front never arrives
  // Linear indices in the order the solver froze them.
  std::vector<std::size_t> acceptance_order;
  // Cells initialised with their exact distance to the source.
  std::vector<std::size_t> seeded;

  double at(CellIndex c) const { return time[shape.linear(c)]; }
};

// Solves the upwind quadratic for one cell from the per-axis minimum
// neighbor times (kUnreached for none) and the local cost spacing / speed.
double upwind_update(const double (&axis_min)[3], double spacing_over_speed);

struct FmmOptions {
  // Cells within this distance (world units) of the source that see it along
  // a straight free line start from their exact travel time. Zero seeds the
  // source cell alone.
  double source_radius = 0.0;
};

// Heap-ordered Fast Marching from a single source cell with T = 0.
ArrivalTimeField fmm_solve(const SpeedField& speed, CellIndex goal, const FmmOptions& options = {});

// Goal in body coordinates -> grid cell. Goals outside the grid are clipped
// along the segment from the grid center; an occupied result is replaced by
// the nearest free cell in breadth-first order.
CellIndex project_goal(const Vec3& goal_body, const OccupancyGrid& grid);

struct Action {
  int dx = 0;
  int dy = 0;
  int dz = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

struct ActionPlan {
  std::vector<CellIndex> cells;  // start first, goal last
  std::vector<Action> steps;     // cells.size() - 1 unit moves
  std::size_t committed = 0;

  bool empty() const { return steps.empty(); }
  // Sum of step lengths, in cells.
  double length() const;
};

// Greedy 26-neighbour descent on T towards T = 0.
ActionPlan extract_path(const ArrivalTimeField& field, CellIndex start);

// The leading min(max_actions, plan length) steps; the rest is replanned.
std::vector<Action> commit_actions(const ActionPlan& plan,
                                   std::size_t max_actions = kCommittedActions);

}  // namespace monofly
