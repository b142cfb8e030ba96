#pragma once

// Synthetic stand-in for a learned disparity network: box scenes, ray-cast
// ground truth, and disparity frames with a hidden scale.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "monofly/camera_geometry.hpp"
#include "monofly/match_selection.hpp"
#include "monofly/raster.hpp"

namespace monofly {

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  // Closed box inflated by `margin` on every side.
  bool contains(const Vec3& p, double margin = 0.0) const {
    return (p.array() >= min.array() - margin).all() && (p.array() <= max.array() + margin).all();
  }
  bool has_positive_extent() const { return (max.array() > min.array()).all(); }
  // Euclidean distance to the closed box; zero inside.
  double distance(const Vec3& p) const {
    return (min - p).cwiseMax(p - max).cwiseMax(0.0).norm();
  }
};

struct Scene {
  std::vector<Box> boxes;
  Box bounds{Vec3::Constant(-1e6), Vec3::Constant(1e6)};
  Vec3 start = Vec3::Zero();
  double start_yaw_deg = 90.0;
  std::optional<Vec3> goal;

  // Throws InvalidArgument on degenerate boxes or a start/goal inside a box.
  void validate() const;
  // True when p is within Euclidean distance `margin` of some box.
  bool collides(const Vec3& p, double margin = 0.0) const;
};

// Line format: `box x0 y0 z0 x1 y1 z1`, `start x y z yaw_deg`, `goal x y z`,
// `bounds x0 y0 z0 x1 y1 z1`; `#` starts a comment. Errors carry the line.
Scene parse_scene(std::istream& in);
Scene load_scene(const std::filesystem::path& path);

// Camera looking along the horizontal heading `yaw` (radians, counter-
// clockwise from world +x) with world +z up. Axis-aligned headings are exact.
Mat3 heading_rotation(double yaw);
CameraPose camera_pose_at(const Vec3& position, double yaw);

// Ray parameter of the nearest entry into `box` along origin + t * dir with
// t > 0, if any (slab method).
std::optional<double> ray_box_entry(const Vec3& origin, const Vec3& dir, const Box& box);

struct RayHit {
  double depth = 0.0;  // camera-frame z of the hit
  bool hit = false;
  Vec3 point = Vec3::Zero();
};

// Casts the ray through pixel center (u, v). Depth is measured along the
// optical axis, the same quantity a stereo rig's disparity is inverse to.
RayHit cast_pixel(const Scene& scene, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                  double u, double v, double max_range);

DepthMap raycast_depth(const Scene& scene, const CameraPose& pose,
                       const CameraIntrinsics& intrinsics, double max_range);

// Deterministic procedural luminance of a surface point, in [0.1, 0.9].
double surface_texture(const Vec3& point);
inline constexpr double kBackgroundLuminance = 0.5;

struct NoiseConfig {
  // Additive disparity noise std as a fraction of kappa / mean true depth.
  double relative_sigma = 0.0;
};

struct FrameObservation {
  DisparityMap disparity;
  DepthMap true_depth;  // oracle only
  GrayImage image;
  CameraPose pose;
  double noise_sigma = 0.0;  // absolute disparity std actually used
};

// Stand-in for the disparity network: disparity = kappa / true_depth with a
// fixed kappa = fx * nominal_baseline that the pipeline never sees.
class SyntheticDisparitySource {
 public:
  static constexpr double kNominalBaseline = 0.1;

  SyntheticDisparitySource(Scene scene, CameraIntrinsics intrinsics, double max_range,
                           NoiseConfig noise = {});

  FrameObservation observe(const CameraPose& pose, std::uint64_t seed) const;

  const Scene& scene() const { return scene_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  double max_range() const { return max_range_; }
  double kappa() const { return kappa_; }

 private:
  Scene scene_;
  CameraIntrinsics intrinsics_;
  double max_range_;
  NoiseConfig noise_;
  double kappa_;
};

FrameObservation observe(const Scene& scene, const CameraPose& pose,
                         const CameraIntrinsics& intrinsics, double max_range, NoiseConfig noise,
                         std::uint64_t seed);

struct MatchSynthesisOptions {
  double max_range = 20.0;
  // Rejects surface points seen under less parallax than this between the
  // two camera centers.
  double min_parallax_deg = 0.0;
  int max_attempts_per_match = 400;
};

// Samples surface points visible from both poses and reports their pixel
// projections (left = pose_a, right = pose_b) with Gaussian jitter. Descriptor
// distances are synthesized so a 0.75 Lowe test keeps at least 85% of them.
std::vector<FeatureMatch> synthetic_matches(const Scene& scene, const CameraPose& pose_a,
                                            const CameraPose& pose_b,
                                            const CameraIntrinsics& intrinsics, std::size_t count,
                                            double jitter_px, std::uint64_t seed,
                                            const MatchSynthesisOptions& options = {});

// Replays DISP files from a directory in lexicographic filename order.
class FileDisparitySource {
 public:
  explicit FileDisparitySource(const std::filesystem::path& directory);

  std::optional<DisparityMap> next();
  std::size_t frame_count() const { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t cursor_ = 0;
};

}  // namespace monofly
