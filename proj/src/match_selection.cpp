#include "monofly/match_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace monofly {

std::vector<FeatureMatch> lowe_ratio_filter(std::span<const FeatureMatch> matches, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "Lowe ratio must lie in (0, 1)");
  }
  std::vector<FeatureMatch> kept;
  for (const auto& m : matches) {
    if (m.best_distance < ratio * m.second_distance) kept.push_back(m);
  }
  return kept;
}

std::vector<FeatureMatch> select_top_n(std::span<const FeatureMatch> matches, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "select_top_n needs n >= 1");
  std::vector<FeatureMatch> sorted(matches.begin(), matches.end());
  const auto before = [](const FeatureMatch& a, const FeatureMatch& b) {
    if (a.best_distance != b.best_distance) return a.best_distance < b.best_distance;
    if (a.left_pixel.y() != b.left_pixel.y()) return a.left_pixel.y() < b.left_pixel.y();
    return a.left_pixel.x() < b.left_pixel.x();
  };
  const std::size_t k = std::min(n, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(),
                    before);
  sorted.resize(k);
  return sorted;
}

SearchRegion SearchRegion::band(Pixel center, int rows, const GrayImage& image, int window) {
  const int half = window / 2;
  SearchRegion r;
  r.x_min = half;
  r.x_max = image.width() - 1 - half;
  r.y_min = std::max(center.y - rows, half);
  r.y_max = std::min(center.y + rows, image.height() - 1 - half);
  return r;
}

namespace {

bool window_fits(const GrayImage& image, Pixel c, int half) {
  return c.x - half >= 0 && c.y - half >= 0 && c.x + half < image.width() &&
         c.y + half < image.height();
}

}  // namespace

PatchMatch find_patch_match(const GrayImage& left, const GrayImage& right, Pixel left_pixel,
                            int window, const SearchRegion& region) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "window must be a positive odd count");
  }
  if (region.empty()) throw Error(ErrorCode::EmptySearchRegion, "no candidate centers");
  const int half = window / 2;
  if (!window_fits(left, left_pixel, half)) {
    throw Error(ErrorCode::PatchOutOfBounds, "template window leaves the left image");
  }
  if (!window_fits(right, {region.x_min, region.y_min}, half) ||
      !window_fits(right, {region.x_max, region.y_max}, half)) {
    throw Error(ErrorCode::PatchOutOfBounds, "search region windows leave the right image");
  }

  const std::size_t area = static_cast<std::size_t>(window) * static_cast<std::size_t>(window);
  std::vector<double> tmpl(area);
  double tmpl_norm2 = 0.0;
  for (int dy = -half, k = 0; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx, ++k) {
      const double v = left.at(left_pixel.x + dx, left_pixel.y + dy);
      tmpl[static_cast<std::size_t>(k)] = v;
      tmpl_norm2 += v * v;
    }
  }
  if (!(tmpl_norm2 > 0.0)) {
    throw Error(ErrorCode::ZeroNormPatch, "template patch has zero norm");
  }
  const double tmpl_norm = std::sqrt(tmpl_norm2);
  for (double& v : tmpl) v /= tmpl_norm;

  // |T^ - W^|^2 = 2 - 2 <T^, W> / |W| for unit T^.
  PatchMatch best{{0, 0}, std::numeric_limits<double>::infinity()};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int y = region.y_min; y <= region.y_max; ++y) {
    for (int x = region.x_min; x <= region.x_max; ++x) {
      double dot = 0.0;
      double norm2 = 0.0;
      for (int dy = -half, k = 0; dy <= half; ++dy) {
        const std::size_t row = right.index(x - half, y + dy);
        const auto values = right.values();
        for (int dx = 0; dx < window; ++dx, ++k) {
          const double v = values[row + static_cast<std::size_t>(dx)];
          dot += tmpl[static_cast<std::size_t>(k)] * v;
          norm2 += v * v;
        }
      }
      if (!(norm2 > 0.0)) continue;
      const double d2 = std::max(0.0, 2.0 - 2.0 * dot / std::sqrt(norm2));
      if (d2 < best_d2) {
        best_d2 = d2;
        best.pixel = {x, y};
      }
    }
  }
  if (!std::isfinite(best_d2)) {
    throw Error(ErrorCode::ZeroNormPatch, "every candidate patch has zero norm");
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

}  // namespace monofly
