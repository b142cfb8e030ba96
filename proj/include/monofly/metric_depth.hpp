#pragma once

// Dense metric depth from a scale-ambiguous disparity map and a handful of
// triangulated anchors.

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "monofly/camera_geometry.hpp"
#include "monofly/match_selection.hpp"
#include "monofly/raster.hpp"

namespace monofly {

// Disparities below this are treated as "beyond sensing range".
inline constexpr double kDisparityFloor = 1e-3;
inline constexpr std::size_t kDefaultSmoothingWindow = 6;

struct DepthAnchor {
  Pixel pixel;
  double depth = 0.0;      // camera-frame z, meters
  double disparity = 0.0;  // predicted disparity at `pixel`
};

// Trailing mean over the most recent `capacity` scalar estimates.
class SmoothingWindow {
 public:
  explicit SmoothingWindow(std::size_t capacity = kDefaultSmoothingWindow);

  // Appends an estimate (evicting the oldest when full) and returns the mean.
  double update(double estimate);
  double mean() const;
  // Adds delta to every entry, flooring at zero.
  void shift_all(double delta);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<double>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<double> entries_;
};

std::pair<SmoothingWindow, double> update_window(SmoothingWindow window, double estimate);

// Per anchor i the scale is depth_i * disparity_i; every output pixel is the
// mean over anchors of scale_i / max(disp(px), floor).
DepthMap scale_disparity(const DisparityMap& disparity, std::span<const DepthAnchor> anchors,
                         double disparity_floor = kDisparityFloor);

// Re-anchors the map so its minimum equals z_min:
// out(px) = (in(px) - min(in)) + z_min.
DepthMap apply_min_depth_shift(const DepthMap& unshifted, double z_min);

struct DepthEstimatorConfig {
  RefineConfig refine{};
  double disparity_floor = kDisparityFloor;
  double baseline_min = kBaselineMin;
  int patch_window = kDefaultPatchWindow;
  int search_rows = kDefaultSearchRows;
  std::size_t smoothing_window = kDefaultSmoothingWindow;
  // Extreme-depth correspondences whose refined RMS reprojection error
  // exceeds this (pixels) are discarded in favour of the scaled map.
  double max_extreme_rms_px = 2.0;
  // They are also discarded when they disagree with the scaled map at the
  // same pixel by more than this factor either way.
  double max_extreme_ratio = 2.0;
  // Shift by min(raw, smoothed) instead of the smoothed value, so a surface
  // that suddenly appears close is not pushed back by older estimates.
  bool conservative_min = false;
};

struct DepthEstimatorState {
  explicit DepthEstimatorState(std::size_t window = kDefaultSmoothingWindow)
      : z_min(window), z_max(window) {}
  SmoothingWindow z_min;
  SmoothingWindow z_max;
};

struct DepthEstimate {
  DepthMap depth;
  std::vector<DepthAnchor> anchors;
  double z_min_raw = 0.0;
  double z_max_raw = 0.0;
  double z_min = 0.0;  // smoothed
  double z_max = 0.0;  // smoothed; output ceiling
  bool z_min_triangulated = false;
  bool z_max_triangulated = false;
};

// Inputs of one pseudo-stereo pair. `disparity` and `left_image` belong to
// the camera `left`; `right_image` to `right`.
struct StereoFrame {
  const DisparityMap& disparity;
  const GrayImage& left_image;
  const GrayImage& right_image;
  ProjectionMatrix left;
  ProjectionMatrix right;
};

// Full chain: triangulate and refine each match into anchors, scale the
// disparity, search the nearest and farthest scene points with the sliding
// patch filter, smooth both extremes and shift/clamp the scaled map.
DepthEstimate estimate_metric_depth(const StereoFrame& frame, std::span<const PixelMatch> matches,
                                    DepthEstimatorState& state,
                                    const DepthEstimatorConfig& config = {});

// Triangulates and refines one correspondence and returns the refined point's
// depth in the left camera, or nullopt when the point is unusable.
std::optional<double> refined_depth(const PixelMatch& match, const ProjectionMatrix& left,
                                    const ProjectionMatrix& right, const DepthEstimatorConfig& config,
                                    double* rms_px = nullptr);

}  // namespace monofly
