#include "monofly/metric_depth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace monofly {

SmoothingWindow::SmoothingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "window capacity must be >= 1");
}

double SmoothingWindow::update(double estimate) {
  if (!std::isfinite(estimate)) throw Error(ErrorCode::InvalidArgument, "estimate not finite");
  entries_.push_back(estimate);
  while (entries_.size() > capacity_) entries_.pop_front();
  return mean();
}

double SmoothingWindow::mean() const {
  if (entries_.empty()) throw Error(ErrorCode::InvalidArgument, "mean of empty window");
  // Summing offsets from the first entry keeps a window of identical values
  // exactly equal to that value.
  const double ref = entries_.front();
  double acc = 0.0;
  for (double e : entries_) acc += e - ref;
  return ref + acc / static_cast<double>(entries_.size());
}

void SmoothingWindow::shift_all(double delta) {
  for (double& e : entries_) e = std::max(0.0, e + delta);
}

std::pair<SmoothingWindow, double> update_window(SmoothingWindow window, double estimate) {
  const double smoothed = window.update(estimate);
  return {std::move(window), smoothed};
}

DepthMap scale_disparity(const DisparityMap& disparity, std::span<const DepthAnchor> anchors,
                         double disparity_floor) {
  if (anchors.empty()) throw Error(ErrorCode::NoAnchors, "scale_disparity needs an anchor");
  for (const auto& a : anchors) {
    if (!(a.disparity > disparity_floor)) {
      throw Error(ErrorCode::AnchorDisparityTooSmall, "anchor disparity at or below floor");
    }
    if (!(a.depth > 0.0) || !std::isfinite(a.depth)) {
      throw Error(ErrorCode::InvalidArgument, "anchor depth must be positive");
    }
  }

  DepthMap out(disparity.width(), disparity.height());
  const auto in = disparity.values();
  auto dst = out.values();
  const double n = static_cast<double>(anchors.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double d = std::max(in[i], disparity_floor);
    double acc = 0.0;
    // depth_i * (disp_i / d) rather than (depth_i * disp_i) / d so that an
    // anchor reproduces its own depth exactly.
    for (const auto& a : anchors) acc += a.depth * (a.disparity / d);
    dst[i] = acc / n;
  }
  return out;
}

DepthMap apply_min_depth_shift(const DepthMap& unshifted, double z_min) {
  if (!(z_min >= 0.0)) throw Error(ErrorCode::InvalidArgument, "z_min must be nonnegative");
  const auto in = unshifted.values();
  const double current = *std::min_element(in.begin(), in.end());
  DepthMap out = unshifted;
  if (z_min == current) return out;  // (v - m) + m can round away from v
  for (double& v : out.values()) v = (v - current) + z_min;
  return out;
}

std::optional<double> refined_depth(const PixelMatch& match, const ProjectionMatrix& left,
                                    const ProjectionMatrix& right,
                                    const DepthEstimatorConfig& config, double* rms_px) {
  try {
    const ScenePoint initial = triangulate(match, left, right, config.baseline_min);
    const ScenePoint refined = refine_point(initial, match, left, right, config.refine);
    const double depth = left.depth_of(refined);
    if (!(depth > 0.0) || !std::isfinite(depth)) return std::nullopt;
    if (rms_px != nullptr) {
      *rms_px = std::sqrt(reprojection_objective(refined, match, left, right) / 2.0);
    }
    return depth;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::PointAtInfinity:
      case ErrorCode::BehindCamera:
      case ErrorCode::NonFinite:
        return std::nullopt;
      default:
        throw;
    }
  }
}

namespace {

// Pixel with the extreme disparity among those whose patch window fits in the
// image; first in row-major order on ties.
std::optional<Pixel> extreme_interior_pixel(const DisparityMap& disparity, int window, bool largest) {
  const int half = window / 2;
  std::optional<Pixel> best;
  double best_value = 0.0;
  for (int y = half; y < disparity.height() - half; ++y) {
    for (int x = half; x < disparity.width() - half; ++x) {
      const double v = disparity.at(x, y);
      if (!best || (largest ? v > best_value : v < best_value)) {
        best = Pixel{x, y};
        best_value = v;
      }
    }
  }
  return best;
}

std::optional<double> search_extreme_depth(const StereoFrame& frame, Pixel left_pixel,
                                           double scaled_depth, const DepthEstimatorConfig& config) {
  try {
    const SearchRegion region =
        SearchRegion::band(left_pixel, config.search_rows, frame.right_image, config.patch_window);
    const PatchMatch found = find_patch_match(frame.left_image, frame.right_image, left_pixel,
                                              config.patch_window, region);
    const PixelMatch match{Vec2(left_pixel.x, left_pixel.y), Vec2(found.pixel.x, found.pixel.y)};
    double rms = 0.0;
    const auto depth = refined_depth(match, frame.left, frame.right, config, &rms);
    if (!depth || rms > config.max_extreme_rms_px) return std::nullopt;
    const double ratio = *depth / scaled_depth;
    if (!(ratio <= config.max_extreme_ratio && ratio * config.max_extreme_ratio >= 1.0)) {
      return std::nullopt;
    }
    return depth;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::ZeroNormPatch:
      case ErrorCode::EmptySearchRegion:
      case ErrorCode::PatchOutOfBounds:
        return std::nullopt;
      default:
        throw;
    }
  }
}

}  // namespace

DepthEstimate estimate_metric_depth(const StereoFrame& frame, std::span<const PixelMatch> matches,
                                    DepthEstimatorState& state, const DepthEstimatorConfig& config) {
  if (matches.empty()) throw Error(ErrorCode::InsufficientMatches, "no matches supplied");
  const double baseline = (frame.left.camera_center() - frame.right.camera_center()).norm();
  if (!(baseline >= config.baseline_min)) {
    throw Error(ErrorCode::DegenerateBaseline, "pseudo-stereo baseline too short");
  }

  DepthEstimate result;
  for (const auto& match : matches) {
    const Pixel px{static_cast<int>(std::lround(match.p.x())),
                   static_cast<int>(std::lround(match.p.y()))};
    if (!frame.disparity.contains(px)) continue;
    const double d = frame.disparity[px];
    if (!(d > config.disparity_floor)) continue;
    const auto depth = refined_depth(match, frame.left, frame.right, config);
    if (!depth) continue;
    result.anchors.push_back({px, *depth, d});
  }
  if (result.anchors.empty()) {
    throw Error(ErrorCode::InsufficientMatches, "every match was rejected");
  }

  const DepthMap unshifted = scale_disparity(frame.disparity, result.anchors, config.disparity_floor);
  const auto scaled = unshifted.values();

  // Largest disparity is the nearest surface, smallest the farthest.
  std::optional<double> near_depth;
  std::optional<double> far_depth;
  if (const auto px = extreme_interior_pixel(frame.disparity, config.patch_window, true)) {
    near_depth = search_extreme_depth(frame, *px, unshifted[*px], config);
  }
  if (const auto px = extreme_interior_pixel(frame.disparity, config.patch_window, false)) {
    far_depth = search_extreme_depth(frame, *px, unshifted[*px], config);
  }

  result.z_min_triangulated = near_depth.has_value();
  result.z_min_raw = near_depth.value_or(*std::min_element(scaled.begin(), scaled.end()));
  result.z_min = state.z_min.update(result.z_min_raw);
  if (config.conservative_min) result.z_min = std::min(result.z_min, result.z_min_raw);

  result.depth = apply_min_depth_shift(unshifted, result.z_min);
  const auto shifted = result.depth.values();

  result.z_max_triangulated = far_depth.has_value();
  result.z_max_raw = far_depth.value_or(*std::max_element(shifted.begin(), shifted.end()));
  result.z_max = state.z_max.update(result.z_max_raw);

  const double ceiling = std::max(result.z_max, result.z_min);
  for (double& v : result.depth.values()) v = std::min(v, ceiling);
  return result;
}

}  // namespace monofly
