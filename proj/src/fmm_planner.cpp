#include "monofly/fmm_planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>
#include <utility>

namespace monofly {

SpeedField::SpeedField(GridShape s, double uniform_speed)
    : shape(s), speed(s.size(), uniform_speed) {
  if (s.nx <= 0 || s.ny <= 0 || s.nz <= 0 || !(s.spacing > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "speed field needs a positive shape and spacing");
  }
  if (!(uniform_speed >= 0.0) || !std::isfinite(uniform_speed)) {
    throw Error(ErrorCode::InvalidArgument, "speed must be finite and nonnegative");
  }
}

SpeedField SpeedField::from_occupancy(const OccupancyGrid& grid) {
  SpeedField field(GridShape{grid.nx(), grid.ny(), grid.nz(), grid.resolution()}, 1.0);
  const auto flags = grid.flags();
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) field.speed[i] = 0.0;
  }
  return field;
}

double upwind_update(const double (&axis_min)[3], double cost) {
  double a[3];
  int m = 0;
  for (double v : axis_min) {
    if (v < kUnreached) a[m++] = v;
  }
  if (m == 0) return kUnreached;
  std::sort(a, a + m);

  // Add axes in increasing order of their upwind value until the solution
  // stops exceeding the next one: sum_k (T - a_k)^2 = cost^2.
  double t = a[0] + cost;
  double sum = a[0];
  double sum_sq = a[0] * a[0];
  for (int k = 1; k < m; ++k) {
    if (t <= a[k]) break;
    sum += a[k];
    sum_sq += a[k] * a[k];
    const double n = k + 1;
    const double disc = sum * sum - n * (sum_sq - cost * cost);
    if (disc < 0.0) break;
    t = (sum + std::sqrt(disc)) / n;
  }
  return t;
}

namespace {

using HeapEntry = std::pair<double, std::size_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

// Straight segment between two cell centers stays in cells with speed > 0.
bool line_of_sight(const SpeedField& speed, CellIndex from, CellIndex to) {
  const Vec3 a(from.x, from.y, from.z);
  const Vec3 b(to.x, to.y, to.z);
  const int samples = static_cast<int>(std::ceil(4.0 * (b - a).norm()));
  for (int i = 1; i < samples; ++i) {
    const Vec3 p = a + (b - a) * (static_cast<double>(i) / samples);
    const CellIndex c{static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())),
                      static_cast<int>(std::lround(p.z()))};
    if (!(speed.at(c) > 0.0)) return false;
  }
  return true;
}

// Exact distances to the source inside a ball of fixed physical radius.
// Removes the point-source singularity that otherwise costs the scheme a
// log(1/h) factor in accuracy.
void seed_source(const SpeedField& speed, CellIndex goal, double radius, ArrivalTimeField& field,
                 MinHeap& heap) {
  const GridShape& g = speed.shape;
  const int r = static_cast<int>(std::floor(radius / g.spacing + 1e-9));
  const double cost = g.spacing / speed.at(goal);
  for (int dz = -r; dz <= r; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const CellIndex c{goal.x + dx, goal.y + dy, goal.z + dz};
        if (!g.contains(c) || (dx == 0 && dy == 0 && dz == 0)) continue;
        const double dist = std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
        if (dist * g.spacing > radius * (1.0 + 1e-12)) continue;
        const std::size_t i = g.linear(c);
        if (!(speed.speed[i] > 0.0) || !line_of_sight(speed, goal, c)) continue;
        field.time[i] = dist * cost;
        field.seeded.push_back(i);
        heap.push({field.time[i], i});
      }
    }
  }
}

}  // namespace

ArrivalTimeField fmm_solve(const SpeedField& speed, CellIndex goal, const FmmOptions& options) {
  const GridShape& g = speed.shape;
  if (!g.contains(goal)) throw Error(ErrorCode::InvalidArgument, "goal outside the grid");
  if (!(speed.at(goal) > 0.0)) throw Error(ErrorCode::GoalInObstacle, "goal cell has zero speed");

  ArrivalTimeField field{g, std::vector<double>(g.size(), kUnreached), {}, {}};
  std::vector<std::uint8_t> accepted(g.size(), 0);
  field.acceptance_order.reserve(g.size());

  MinHeap heap;
  const std::size_t goal_index = g.linear(goal);
  field.time[goal_index] = 0.0;
  heap.push({0.0, goal_index});
  if (options.source_radius > 0.0) seed_source(speed, goal, options.source_radius, field, heap);

  const std::size_t strides[3] = {1, static_cast<std::size_t>(g.nx),
                                  static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny)};
  const int dims[3] = {g.nx, g.ny, g.nz};

  while (!heap.empty()) {
    const auto [t, index] = heap.top();
    heap.pop();
    if (accepted[index] || t != field.time[index]) continue;
    accepted[index] = 1;
    field.acceptance_order.push_back(index);

    const CellIndex c = g.cell(index);
    const int coords[3] = {c.x, c.y, c.z};
    for (int axis = 0; axis < 3; ++axis) {
      for (int dir : {-1, 1}) {
        const int nc = coords[axis] + dir;
        if (nc < 0 || nc >= dims[axis]) continue;
        const std::size_t n = dir < 0 ? index - strides[axis] : index + strides[axis];
        if (accepted[n] || !(speed.speed[n] > 0.0)) continue;

        const CellIndex nb = g.cell(n);
        const int ncoords[3] = {nb.x, nb.y, nb.z};
        double axis_min[3];
        for (int a = 0; a < 3; ++a) {
          double best = kUnreached;
          if (ncoords[a] > 0 && accepted[n - strides[a]]) best = field.time[n - strides[a]];
          if (ncoords[a] + 1 < dims[a] && accepted[n + strides[a]]) {
            best = std::min(best, field.time[n + strides[a]]);
          }
          axis_min[a] = best;
        }
        const double candidate = upwind_update(axis_min, g.spacing / speed.speed[n]);
        if (candidate < field.time[n]) {
          field.time[n] = candidate;
          heap.push({candidate, n});
        }
      }
    }
  }
  return field;
}

CellIndex project_goal(const Vec3& goal_body, const OccupancyGrid& grid) {
  if (!goal_body.allFinite()) throw Error(ErrorCode::InvalidArgument, "goal not finite");

  CellIndex target;
  if (const auto inside = grid.cell_of(goal_body)) {
    target = *inside;
  } else {
    const Vec3 center = grid.center();
    const Vec3 lo = grid.lower();
    const Vec3 hi = grid.upper();
    const Vec3 d = goal_body - center;
    double t = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (d[a] > 0.0) t = std::min(t, (hi[a] - center[a]) / d[a]);
      if (d[a] < 0.0) t = std::min(t, (lo[a] - center[a]) / d[a]);
    }
    const Vec3 p = center + t * d;
    const double res = grid.resolution();
    const int n[3] = {grid.nx(), grid.ny(), grid.nz()};
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      const auto i = static_cast<long long>(std::floor((p[a] - lo[a]) / res));
      idx[a] = static_cast<int>(std::clamp<long long>(i, 0, n[a] - 1));
    }
    target = {idx[0], idx[1], idx[2]};
  }
  if (!grid.occupied(target)) return target;

  std::vector<std::uint8_t> seen(grid.size(), 0);
  std::deque<CellIndex> queue{target};
  seen[grid.linear(target)] = 1;
  static constexpr int kFace[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                      {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
  while (!queue.empty()) {
    const CellIndex c = queue.front();
    queue.pop_front();
    if (!grid.occupied(c)) return c;
    for (const auto& o : kFace) {
      const CellIndex nb{c.x + o[0], c.y + o[1], c.z + o[2]};
      if (!grid.contains(nb) || seen[grid.linear(nb)]) continue;
      seen[grid.linear(nb)] = 1;
      queue.push_back(nb);
    }
  }
  throw Error(ErrorCode::NoFreeCell, "occupancy grid is fully occupied");
}

double ActionPlan::length() const {
  double total = 0.0;
  for (const auto& s : steps) {
    total += std::sqrt(static_cast<double>(s.dx * s.dx + s.dy * s.dy + s.dz * s.dz));
  }
  return total;
}

ActionPlan extract_path(const ArrivalTimeField& field, CellIndex start) {
  const GridShape& g = field.shape;
  if (!g.contains(start)) throw Error(ErrorCode::InvalidArgument, "start outside the grid");
  if (!(field.at(start) < kUnreached)) {
    throw Error(ErrorCode::PlanningFailed, "start is not reachable from the goal");
  }

  ActionPlan plan;
  plan.cells.push_back(start);
  CellIndex current = start;
  double current_t = field.at(start);
  const std::size_t limit = g.size();
  while (current_t > 0.0) {
    if (plan.steps.size() >= limit) {
      throw Error(ErrorCode::StuckAtLocalPlateau, "descent exceeded the cell count");
    }
    // Neighbours are visited in increasing linear index, so the first strict
    // minimum found is the row-major tie-break winner.
    CellIndex best = current;
    double best_t = current_t;
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const CellIndex nb{current.x + dx, current.y + dy, current.z + dz};
          if (!g.contains(nb)) continue;
          const double t = field.at(nb);
          if (t < best_t) {
            best_t = t;
            best = nb;
          }
        }
      }
    }
    if (best == current) {
      throw Error(ErrorCode::StuckAtLocalPlateau, "no neighbour with a smaller arrival time");
    }
    plan.steps.push_back({best.x - current.x, best.y - current.y, best.z - current.z});
    plan.cells.push_back(best);
    current = best;
    current_t = best_t;
  }
  return plan;
}

std::vector<Action> commit_actions(const ActionPlan& plan, std::size_t max_actions) {
  const std::size_t n = std::min(max_actions, plan.steps.size());
  return {plan.steps.begin(), plan.steps.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace monofly
