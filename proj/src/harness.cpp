#include "monofly/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace monofly {

void RunConfig::validate() const {
  intrinsics.validate();
  if (!(resolution > 0.0) || !(radius >= resolution)) {
    throw Error(ErrorCode::InvalidArgument, "need resolution > 0 and radius >= resolution");
  }
  if (pad_cells < 0 || stride < 1 || smoothing_window < 1 || anchors < 1 || max_steps < 1) {
    throw Error(ErrorCode::InvalidArgument, "pad, stride, window, anchors and steps must be positive");
  }
  if (!(noise >= 0.0) || !(max_range > 0.0) || !(match_jitter_px >= 0.0) ||
      !(bootstrap_offset >= kBaselineMin) || !(collision_margin >= 0.0) ||
      !(fmm_source_cells >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "out-of-range run parameter");
  }
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t cycle, std::uint64_t stream) {
  // splitmix64 finaliser over the packed inputs.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + (cycle << 8) + stream;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Columns are the body axes (right, forward, up) in world coordinates.
Mat3 body_to_world(double yaw) {
  const Mat3 camera = heading_rotation(yaw);
  Mat3 r;
  r.col(0) = camera.row(0).transpose();
  r.col(1) = camera.row(2).transpose();
  r.col(2) = Vec3::UnitZ();
  return r;
}

bool segment_collides(const Scene& scene, const Vec3& from, const Vec3& to, double margin) {
  constexpr int kSamples = 32;
  for (int i = 0; i <= kSamples; ++i) {
    const Vec3 p = from + (to - from) * (static_cast<double>(i) / kSamples);
    if (scene.collides(p, margin)) return true;
  }
  return false;
}

// Cells the camera cannot vouch for: centers closer than `clearance` to a
// side of the view frustum, or behind the observed surface. The frustum is
// convex, so a straight move between two vouched-for centers keeps a ball of
// that radius inside it.
void mark_unobserved(OccupancyGrid& grid, const CameraIntrinsics& k, const DepthMap* depth,
                     const Vec3& grid_offset, double clearance) {
  // Image edges as offsets from the principal point.
  const double left = -0.5 - k.cx;
  const double right = k.width - 0.5 - k.cx;
  const double top = -0.5 - k.cy;
  const double bottom = k.height - 0.5 - k.cy;
  const auto slack = [](double f, double lateral, double edge, double z) {
    return (edge * z - f * lateral) / std::hypot(f, edge);
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellIndex c = grid.cell(i);
    const Vec3 body = grid.cell_center(c) - grid_offset;
    // Camera coordinates: x right, y down, z forward.
    const double x = body.x();
    const double y = -body.z();
    const double z = body.y();
    bool unknown = !(z > 0.0) || slack(k.fx, x, right, z) < clearance ||
                   -slack(k.fx, x, left, z) < clearance || slack(k.fy, y, bottom, z) < clearance ||
                   -slack(k.fy, y, top, z) < clearance;
    if (!unknown && depth != nullptr) {
      const long pu = std::lround(k.fx * x / z + k.cx);
      const long pv = std::lround(k.fy * y / z + k.cy);
      unknown = z > depth->at(static_cast<int>(pu), static_cast<int>(pv)) + grid.resolution();
    }
    if (unknown) grid.set(c);
  }
}

// The vehicle may sit inside padding with every face neighbour blocked. Let
// it leave diagonally by taking its time from the best free 26-neighbour.
void bridge_start(ArrivalTimeField& field, CellIndex start) {
  if (field.at(start) < kUnreached) return;
  double best = kUnreached;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const CellIndex nb{start.x + dx, start.y + dy, start.z + dz};
        if (!field.shape.contains(nb) || !(field.at(nb) < kUnreached)) continue;
        const double step = field.shape.spacing * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
        best = std::min(best, field.at(nb) + step);
      }
    }
  }
  field.time[field.shape.linear(start)] = best;
}

// Free cells connected to `start` by face moves, after a first move to any
// of its 26 neighbours (matching bridge_start).
std::vector<std::uint8_t> reachable_cells(const OccupancyGrid& grid, CellIndex start) {
  std::vector<std::uint8_t> seen(grid.size(), 0);
  std::vector<CellIndex> stack;
  const auto visit = [&](CellIndex c) {
    if (!grid.contains(c) || grid.occupied(c) || seen[grid.linear(c)]) return;
    seen[grid.linear(c)] = 1;
    stack.push_back(c);
  };
  seen[grid.linear(start)] = 1;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) visit({start.x + dx, start.y + dy, start.z + dz});
    }
  }
  while (!stack.empty()) {
    const CellIndex c = stack.back();
    stack.pop_back();
    visit({c.x - 1, c.y, c.z});
    visit({c.x + 1, c.y, c.z});
    visit({c.x, c.y - 1, c.z});
    visit({c.x, c.y + 1, c.z});
    visit({c.x, c.y, c.z - 1});
    visit({c.x, c.y, c.z + 1});
  }
  return seen;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

Simulation::Simulation(Scene scene, RunConfig config)
    : scene_(std::move(scene)),
      config_(std::move(config)),
      source_(scene_, config_.intrinsics, config_.max_range, NoiseConfig{config_.noise}) {
  config_.validate();
  scene_.validate();
  if (config_.goal) {
    goal_ = *config_.goal;
  } else if (scene_.goal) {
    goal_ = *scene_.goal;
  } else {
    throw Error(ErrorCode::InvalidArgument, "no goal in the scene or the configuration");
  }
}

DroneState Simulation::initial_state() const {
  return DroneState{scene_.start, scene_.start_yaw_deg * M_PI / 180.0, 0};
}

Vec3 Simulation::world_to_grid(const DroneState& state, const Vec3& world) const {
  // Shifted by half a cell so the vehicle sits at the center of its cell.
  const Vec3 body = body_to_world(state.yaw).transpose() * (world - state.position);
  return body + Vec3::Constant(0.5 * config_.resolution);
}

Vec3 Simulation::body_step_to_world(const DroneState& state, const Action& a) const {
  return body_to_world(state.yaw) * (config_.resolution * Vec3(a.dx, a.dy, a.dz));
}

bool Simulation::at_goal(const DroneState& state) const {
  const OccupancyGrid probe(config_.resolution, config_.radius);
  const auto cell = probe.cell_of(world_to_grid(state, goal_));
  return cell && *cell == probe.vehicle_cell();
}

CycleRecord Simulation::plan_cycle(const DroneState& state, PipelineState& pipeline,
                                   const std::optional<DisparityMap>& external,
                                   CycleProducts* products) const {
  CycleRecord rec;
  rec.cycle = ++pipeline.cycle;
  rec.position = state.position;
  rec.yaw = state.yaw;
  rec.status = "ok";

  const Mat3 to_world = body_to_world(state.yaw);
  const Vec3 right_w = to_world.col(0);
  const Vec3 forward_w = to_world.col(1);
  Vec3 partner = state.position + config_.bootstrap_offset * right_w;
  double partner_yaw = state.yaw;
  // The previous frame only pairs up if it looked roughly the same way.
  constexpr double kMaxPartnerTurn = M_PI / 6.0;
  if (pipeline.partner_position &&
      (*pipeline.partner_position - state.position).norm() >= kBaselineMin &&
      std::abs(std::remainder(pipeline.partner_yaw - state.yaw, 2.0 * M_PI)) <= kMaxPartnerTurn) {
    partner = *pipeline.partner_position;
    partner_yaw = pipeline.partner_yaw;
  }
  const CameraPose pose = camera_pose_at(state.position, state.yaw);
  const CameraPose partner_pose = camera_pose_at(partner, partner_yaw);
  const auto cycle = static_cast<std::uint64_t>(rec.cycle);

  FrameObservation current = source_.observe(pose, mix_seed(config_.seed, cycle, 1));
  if (external) {
    if (external->width() != config_.intrinsics.width ||
        external->height() != config_.intrinsics.height) {
      throw Error(ErrorCode::InvalidArgument, "disparity frame does not match the camera size");
    }
    validate(*external);
    current.disparity = *external;
  }
  const FrameObservation previous = source_.observe(partner_pose, mix_seed(config_.seed, cycle, 2));

  std::optional<DepthEstimate> estimate;
  try {
    const auto features =
        synthetic_matches(scene_, pose, partner_pose, config_.intrinsics, 2 * config_.anchors,
                          config_.match_jitter_px, mix_seed(config_.seed, cycle, 3),
                          MatchSynthesisOptions{config_.max_range, 0.0, 400});
    const auto selected = select_top_n(lowe_ratio_filter(features, config_.lowe_ratio), config_.anchors);
    std::vector<PixelMatch> matches;
    for (const auto& f : selected) matches.push_back(f.pixel_match());

    // The smoothed extremes are camera-relative; carry them along with the
    // vehicle's own forward motion since the last estimate.
    if (pipeline.last_estimate_position) {
      const double advance = (state.position - *pipeline.last_estimate_position).dot(forward_w);
      pipeline.depth.z_min.shift_all(-advance);
      pipeline.depth.z_max.shift_all(-advance);
    }
    DepthEstimatorConfig depth_config;
    depth_config.smoothing_window = config_.smoothing_window;
    depth_config.conservative_min = config_.unknown_occupied;
    const StereoFrame frame{current.disparity, current.image, previous.image,
                            compose_projection(config_.intrinsics, pose),
                            compose_projection(config_.intrinsics, partner_pose)};
    estimate = estimate_metric_depth(frame, matches, pipeline.depth, depth_config);
    pipeline.last_estimate_position = state.position;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientVisibleSurface &&
        e.code() != ErrorCode::InsufficientMatches) {
      throw;
    }
    rec.status = "no_surface";
  }

  const double res = config_.resolution;
  const Vec3 offset = Vec3::Constant(0.5 * res);
  PointCloud cloud;
  if (estimate) {
    rec.anchors = estimate->anchors.size();
    rec.z_min_raw = estimate->z_min_raw;
    rec.z_min = estimate->z_min;
    rec.z_max_raw = estimate->z_max_raw;
    rec.z_max = estimate->z_max;
    const double ceiling = std::max(estimate->z_max, estimate->z_min);
    cloud = depth_to_pointcloud(estimate->depth, config_.intrinsics, config_.stride, ceiling,
                                config_.unknown_occupied);
    for (auto& p : cloud.points) p += offset;
  }
  const OccupancyGrid observed = bin_points(cloud, res, config_.radius);
  OccupancyGrid grid = pad_obstacles(observed, config_.pad_cells);
  const CellIndex vehicle = grid.vehicle_cell();
  if (config_.unknown_occupied) {
    mark_unobserved(grid, config_.intrinsics, estimate ? &estimate->depth : nullptr, offset,
                    config_.collision_margin);
  }
  // Geofence: everything outside the scene bounds is off limits.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellIndex c = grid.cell(i);
    const Vec3 world = state.position + to_world * (grid.cell_center(c) - offset);
    if (!scene_.bounds.contains(world)) grid.set(c);
  }
  grid.set(vehicle, false);  // the vehicle occupies its own cell by definition
  rec.occupied = grid.occupied_count();

  if (products) {
    if (estimate) products->depth = estimate->depth;
    products->grid = grid;
    products->path.clear();
  }

  try {
    const Vec3 goal_grid = world_to_grid(state, goal_);
    const SpeedField speed = SpeedField::from_occupancy(grid);
    const FmmOptions fmm{config_.fmm_source_cells * res};
    const CellIndex projected = project_goal(goal_grid, grid);
    const bool goal_here = grid.cell_of(goal_grid) == vehicle;
    ArrivalTimeField field = fmm_solve(speed, projected, fmm);
    bridge_start(field, vehicle);
    if (!(field.at(vehicle) < kUnreached) || (projected == vehicle && !goal_here)) {
      // The projected goal sits in a pocket the vehicle cannot reach, or the
      // breadth-first fallback landed on the vehicle itself. Head for the
      // reachable cell closest to the real goal instead.
      const auto reach = reachable_cells(grid, vehicle);
      CellIndex best = vehicle;
      double best_d = (grid.cell_center(vehicle) - goal_grid).squaredNorm();
      for (std::size_t i = 0; i < reach.size(); ++i) {
        if (!reach[i]) continue;
        const CellIndex c = grid.cell(i);
        const double d = (grid.cell_center(c) - goal_grid).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      field = fmm_solve(speed, best, fmm);
      bridge_start(field, vehicle);
      rec.status = "detour";
    }
    const ActionPlan plan = extract_path(field, vehicle);
    rec.plan_length = plan.steps.size();
    rec.committed = commit_actions(plan);
    if (products) products->path = plan.cells;
    // Nothing reachable is closer to the goal than the vehicle itself.
    if (plan.empty()) rec.status = goal_here ? "at_goal" : "planning_failed";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::PlanningFailed && e.code() != ErrorCode::NoFreeCell) throw;
    rec.status = "planning_failed";
  }
  return rec;
}

CycleRecord Simulation::step(DroneState& state, PipelineState& pipeline,
                             CycleProducts* products) const {
  if (at_goal(state)) {
    CycleRecord rec;
    rec.cycle = ++pipeline.cycle;
    rec.position = state.position;
    rec.yaw = state.yaw;
    rec.status = "at_goal";
    rec.goal_distance = (goal_ - state.position).norm();
    return rec;
  }

  if (config_.face_goal) {
    // While no move is possible, sweep the heading around the goal bearing
    // so that other parts of the surroundings come into view.
    static constexpr double kScanDeg[] = {0, 45, -45, 90, -90, 135, -135, 180};
    const Vec3 d = goal_ - state.position;
    if (std::hypot(d.x(), d.y()) > 0.5 * config_.resolution) {
      state.yaw = std::remainder(std::atan2(d.y(), d.x()) + kScanDeg[pipeline.scan_index] * M_PI / 180.0,
                                 2.0 * M_PI);
    }
  }
  CycleRecord rec = plan_cycle(state, pipeline, std::nullopt, products);
  pipeline.partner_position.reset();
  pipeline.partner_yaw = state.yaw;
  for (const Action& a : rec.committed) {
    const Vec3 next = state.position + body_step_to_world(state, a);
    if (segment_collides(scene_, state.position, next, config_.collision_margin) ||
        !scene_.bounds.contains(next)) {
      rec.status = "collision";
      break;
    }
    state.position = next;
    ++state.step_count;
    if (++rec.executed == 1) pipeline.partner_position = state.position;
  }
  pipeline.scan_index = rec.executed > 0 ? 0 : (pipeline.scan_index + 1) % 8;
  rec.goal_distance = (goal_ - state.position).norm();
  return rec;
}

CycleRecord Simulation::plan_once(const DroneState& state, const DisparityMap& disparity,
                                  CycleProducts* products) const {
  PipelineState pipeline(config_.smoothing_window);
  CycleRecord rec = plan_cycle(state, pipeline, disparity, products);
  rec.goal_distance = (goal_ - state.position).norm();
  return rec;
}

std::string RunLog::to_text() const {
  std::ostringstream os;
  for (const auto& r : records) {
    os << "cycle=" << r.cycle << " x=" << fmt(r.position.x()) << " y=" << fmt(r.position.y())
       << " z=" << fmt(r.position.z()) << " yaw=" << fmt(r.yaw) << " status=" << r.status
       << " anchors=" << r.anchors << " z_min_raw=" << fmt(r.z_min_raw)
       << " z_min=" << fmt(r.z_min) << " z_max_raw=" << fmt(r.z_max_raw)
       << " z_max=" << fmt(r.z_max) << " occupied=" << r.occupied
       << " plan_length=" << r.plan_length << " committed=" << r.committed.size() << " executed=" << r.executed << " actions=";
    if (r.committed.empty()) os << "-";
    for (std::size_t i = 0; i < r.committed.size(); ++i) {
      const auto& a = r.committed[i];
      os << (i ? ";" : "") << a.dx << "," << a.dy << "," << a.dz;
    }
    os << " goal_distance=" << fmt(r.goal_distance) << "\n";
  }
  os << "result goal_reached=" << (goal_reached ? 1 : 0) << " cycles=" << records.size()
     << " collisions=" << collisions << " termination=" << termination << "\n";
  return os.str();
}

namespace {

std::string numbered(const char* stem, int cycle, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, cycle, ext);
  return buf;
}

void write_artifacts(const std::filesystem::path& dir, const CycleRecord& rec,
                     const CycleProducts& products, double max_range) {
  if (products.depth) {
    write_file_bytes(dir / numbered("depth", rec.cycle, "pgm"),
                     encode_depth_pgm(*products.depth, max_range));
  }
  if (products.grid) {
    const int layer = products.grid->vehicle_cell().z;
    write_file_bytes(dir / numbered("occupancy", rec.cycle, "pgm"),
                     encode_slice_pgm(*products.grid, layer));
    write_file_bytes(dir / numbered("plan", rec.cycle, "ppm"),
                     encode_path_ppm(*products.grid, layer, products.path));
  }
}

}  // namespace

RunResult run(const Scene& scene, const RunConfig& config) {
  const Simulation sim(scene, config);
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  RunResult result;
  DroneState state = sim.initial_state();
  PipelineState pipeline(config.smoothing_window);
  result.log.goal_reached = sim.at_goal(state);
  for (int cycle = 0; cycle < config.max_steps && !result.log.goal_reached; ++cycle) {
    CycleProducts products;
    CycleRecord rec = sim.step(state, pipeline, &products);
    if (!config.out_dir.empty()) write_artifacts(config.out_dir, rec, products, config.max_range);
    const bool collided = rec.status == "collision";
    result.log.records.push_back(std::move(rec));
    if (collided) {
      ++result.log.collisions;
      break;
    }
    result.log.goal_reached = sim.at_goal(state);
  }

  if (result.log.goal_reached) {
    result.log.termination = "goal_reached";
    result.exit_code = 0;
  } else if (result.log.collisions > 0) {
    result.log.termination = "collision";
    result.exit_code = 1;
  } else if (!result.log.records.empty() && result.log.records.back().status == "planning_failed") {
    result.log.termination = "planning_failed";
    result.exit_code = 2;
  } else {
    result.log.termination = "max_steps";
    result.exit_code = 2;
  }
  if (!config.out_dir.empty()) {
    const std::string text = result.log.to_text();
    write_file_bytes(config.out_dir / "run.log",
                     std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  return result;
}

RunResult run(const RunConfig& config) { return run(load_scene(config.scene_path), config); }

}  // namespace monofly
