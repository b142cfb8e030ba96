#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "monofly/camera_geometry.hpp"
#include "monofly/raster.hpp"

namespace monofly {

// A keypoint correspondence with the distances to its best and second-best
// descriptor candidates.
struct FeatureMatch {
  Vec2 left_pixel = Vec2::Zero();
  Vec2 right_pixel = Vec2::Zero();
  double best_distance = 0.0;
  double second_distance = 0.0;

  PixelMatch pixel_match() const { return PixelMatch{left_pixel, right_pixel}; }
};

inline constexpr double kDefaultLoweRatio = 0.75;
inline constexpr std::size_t kDefaultTopMatches = 16;
inline constexpr int kDefaultPatchWindow = 11;
inline constexpr int kDefaultSearchRows = 8;

// Keeps matches with best_distance < ratio * second_distance, in input order.
std::vector<FeatureMatch> lowe_ratio_filter(std::span<const FeatureMatch> matches,
                                            double ratio = kDefaultLoweRatio);

// The n matches with the smallest best_distance, ascending. Equal distances
// are ordered by the left pixel in row-major order.
std::vector<FeatureMatch> select_top_n(std::span<const FeatureMatch> matches,
                                       std::size_t n = kDefaultTopMatches);

// Inclusive rectangle of candidate patch centers in the right image.
struct SearchRegion {
  int x_min = 0;
  int x_max = -1;
  int y_min = 0;
  int y_max = -1;

  bool empty() const { return x_max < x_min || y_max < y_min; }

  // Rows center.y +/- rows across the full width, clipped to centers whose
  // window lies inside `image`.
  static SearchRegion band(Pixel center, int rows, const GrayImage& image, int window);
};

struct PatchMatch {
  Pixel pixel;
  double distance = 0.0;  // || T/|T| - W/|W| ||_2
};

// Slides a window over `region` in the right image and returns the center
// whose normalized patch is closest to the normalized left patch around
// `left_pixel`. Ties go to the smallest row-major index. Candidate patches
// with zero norm cannot be normalized and are skipped.
PatchMatch find_patch_match(const GrayImage& left, const GrayImage& right, Pixel left_pixel,
                            int window, const SearchRegion& region);

inline Pixel min_disparity_correspondence(const GrayImage& left, const GrayImage& right,
                                          Pixel left_pixel, int window,
                                          const SearchRegion& region) {
  return find_patch_match(left, right, left_pixel, window, region).pixel;
}

}  // namespace monofly
