#pragma once

// Closed-loop simulation: observe -> metric depth -> occupancy -> plan -> move.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "monofly/camera_geometry.hpp"
#include "monofly/disparity_source.hpp"
#include "monofly/fmm_planner.hpp"
#include "monofly/metric_depth.hpp"
#include "monofly/occupancy.hpp"

namespace monofly {

struct RunConfig {
  std::filesystem::path scene_path;
  std::optional<Vec3> goal;  // overrides the scene's goal
  double resolution = kDefaultResolution;
  double radius = kDefaultRadius;
  int pad_cells = kDefaultPadCells;
  int stride = kDefaultStride;
  std::size_t smoothing_window = kDefaultSmoothingWindow;
  std::size_t anchors = kDefaultTopMatches;
  double lowe_ratio = kDefaultLoweRatio;
  double noise = 0.0;  // relative disparity noise
  int max_steps = 200;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;  // empty: no artifacts

  CameraIntrinsics intrinsics{100.0, 100.0, 79.5, 59.5, 160, 120};
  double max_range = 20.0;
  double match_jitter_px = 0.0;
  double bootstrap_offset = 0.1;  // lateral, meters
  double collision_margin = 0.1;  // vehicle body radius, meters
  // Conservative mode: cells outside the view frustum or behind the observed
  // surface count as occupied, so the vehicle only moves through space it has
  // just seen. Off by default, unknown space is free.
  bool unknown_occupied = false;
  // Turn to face the goal before each observation.
  bool face_goal = true;
  // Exact-distance seeding around the goal, in cells.
  double fmm_source_cells = 2.0;

  void validate() const;
};

struct DroneState {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;  // radians, counter-clockwise from world +x
  int step_count = 0;
};

struct CycleRecord {
  int cycle = 0;
  Vec3 position = Vec3::Zero();  // at the start of the cycle
  double yaw = 0.0;
  std::string status;  // ok, no_surface, planning_failed, at_goal, collision
  std::size_t anchors = 0;
  double z_min_raw = 0.0;
  double z_min = 0.0;
  double z_max_raw = 0.0;
  double z_max = 0.0;
  std::size_t occupied = 0;
  std::size_t plan_length = 0;
  std::vector<Action> committed;
  std::size_t executed = 0;  // committed actions actually flown
  double goal_distance = 0.0;  // after executing the committed actions
};

struct RunLog {
  std::vector<CycleRecord> records;
  bool goal_reached = false;
  std::size_t collisions = 0;
  std::string termination;  // goal_reached, max_steps, collision

  // One `key=value` line per cycle followed by a summary line.
  std::string to_text() const;
};

// State carried between planning cycles.
struct PipelineState {
  explicit PipelineState(std::size_t window = kDefaultSmoothingWindow) : depth(window) {}
  DepthEstimatorState depth;
  std::optional<Vec3> partner_position;    // after the previous cycle's first move
  double partner_yaw = 0.0;
  int scan_index = 0;  // heading offset step while hovering, see step()
  std::optional<Vec3> last_estimate_position;
  int cycle = 0;
};

// Everything one cycle produced, for artifact export.
struct CycleProducts {
  std::optional<DepthMap> depth;
  std::optional<OccupancyGrid> grid;
  std::vector<CellIndex> path;
};

class Simulation {
 public:
  Simulation(Scene scene, RunConfig config);

  const Scene& scene() const { return scene_; }
  const RunConfig& config() const { return config_; }
  const Vec3& goal() const { return goal_; }
  DroneState initial_state() const;

  bool at_goal(const DroneState& state) const;

  // One full planning cycle; moves the drone by up to three cells.
  CycleRecord step(DroneState& state, PipelineState& pipeline, CycleProducts* products = nullptr) const;

  // Plans from an externally supplied disparity frame at `state` without
  // moving. The pseudo-stereo partner is the bootstrap offset pose.
  CycleRecord plan_once(const DroneState& state, const DisparityMap& disparity,
                        CycleProducts* products = nullptr) const;

  // Maps a world point into the planning grid frame of `state`.
  Vec3 world_to_grid(const DroneState& state, const Vec3& world) const;
  Vec3 body_step_to_world(const DroneState& state, const Action& action) const;

 private:
  CycleRecord plan_cycle(const DroneState& state, PipelineState& pipeline,
                         const std::optional<DisparityMap>& external, CycleProducts* products) const;

  Scene scene_;
  RunConfig config_;
  Vec3 goal_;
  SyntheticDisparitySource source_;
};

struct RunResult {
  RunLog log;
  int exit_code = 1;  // 0 goal reached, 2 step budget exhausted, 1 error
};

// Loads the scene, loops until the goal cell is reached or the step budget
// runs out, and writes per-cycle artifacts plus run.log to out_dir.
RunResult run(const RunConfig& config);
RunResult run(const Scene& scene, const RunConfig& config);

}  // namespace monofly
