#include "monofly/disparity_source.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace monofly {

bool Scene::collides(const Vec3& p, double margin) const {
  return std::any_of(boxes.begin(), boxes.end(),
                     [&](const Box& b) { return b.distance(p) <= margin; });
}

void Scene::validate() const {
  for (const auto& b : boxes) {
    if (!b.has_positive_extent()) {
      throw Error(ErrorCode::InvalidArgument, "box with non-positive extent");
    }
  }
  if (!bounds.has_positive_extent()) throw Error(ErrorCode::InvalidArgument, "empty bounds");
  if (collides(start)) throw Error(ErrorCode::InvalidArgument, "start lies inside a box");
  if (goal && collides(*goal)) throw Error(ErrorCode::InvalidArgument, "goal lies inside a box");
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorCode::SceneParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<double> read_numbers(std::istringstream& in, std::size_t count, int line,
                                 const std::string& keyword) {
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      parse_fail(line, "'" + token + "' is not a number");
    }
    if (used != token.size() || !std::isfinite(v)) parse_fail(line, "'" + token + "' is not a number");
    values.push_back(v);
  }
  if (values.size() != count) {
    parse_fail(line, "'" + keyword + "' expects " + std::to_string(count) + " values, got " +
                         std::to_string(values.size()));
  }
  return values;
}

}  // namespace

Scene parse_scene(std::istream& in) {
  Scene scene;
  std::string raw;
  int line = 0;
  bool has_bounds = false;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream tokens(raw);
    std::string keyword;
    if (!(tokens >> keyword)) continue;
    if (keyword == "box" || keyword == "bounds") {
      const auto v = read_numbers(tokens, 6, line, keyword);
      Box b{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
      if (!b.has_positive_extent()) parse_fail(line, keyword + " needs min < max on every axis");
      if (keyword == "box") {
        scene.boxes.push_back(b);
      } else {
        scene.bounds = b;
        has_bounds = true;
      }
    } else if (keyword == "start") {
      const auto v = read_numbers(tokens, 4, line, keyword);
      scene.start = Vec3(v[0], v[1], v[2]);
      scene.start_yaw_deg = v[3];
    } else if (keyword == "goal") {
      const auto v = read_numbers(tokens, 3, line, keyword);
      scene.goal = Vec3(v[0], v[1], v[2]);
    } else {
      parse_fail(line, "unknown keyword '" + keyword + "'");
    }
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failure");
  if (has_bounds && !scene.bounds.contains(scene.start)) {
    throw Error(ErrorCode::SceneParseError, "start lies outside bounds");
  }
  try {
    scene.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SceneParseError, e.what());
  }
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scene " + path.string());
  return parse_scene(in);
}

Mat3 heading_rotation(double yaw) {
  const auto snap = [](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; };
  const double c = snap(std::cos(yaw));
  const double s = snap(std::sin(yaw));
  // Rows are the camera axes in world coordinates: right, down, forward.
  Mat3 r;
  r << s, -c, 0.0,
       0.0, 0.0, -1.0,
       c, s, 0.0;
  return r;
}

CameraPose camera_pose_at(const Vec3& position, double yaw) {
  return CameraPose::from_center(heading_rotation(yaw), position);
}

std::optional<double> ray_box_entry(const Vec3& origin, const Vec3& dir, const Box& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double t1 = (box.min[a] - origin[a]) / dir[a];
    double t2 = (box.max[a] - origin[a]) / dir[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || !(t_near > 0.0)) return std::nullopt;
  return t_near;
}

RayHit cast_pixel(const Scene& scene, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                  double u, double v, double max_range) {
  const Vec3 dir_cam((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy, 1.0);
  const Vec3 dir = pose.rotation.transpose() * dir_cam;
  const Vec3 origin = pose.center();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& box : scene.boxes) {
    if (const auto t = ray_box_entry(origin, dir, box); t && *t < best) best = *t;
  }
  RayHit hit;
  if (best < max_range) {
    hit.hit = true;
    hit.depth = best;
    hit.point = origin + best * dir;
  } else {
    hit.depth = max_range;
  }
  return hit;
}

DepthMap raycast_depth(const Scene& scene, const CameraPose& pose,
                       const CameraIntrinsics& intrinsics, double max_range) {
  if (!(max_range > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_range must be positive");
  DepthMap depth(intrinsics.width, intrinsics.height);
  for (int v = 0; v < intrinsics.height; ++v) {
    for (int u = 0; u < intrinsics.width; ++u) {
      depth.at(u, v) = cast_pixel(scene, pose, intrinsics, u, v, max_range).depth;
    }
  }
  return depth;
}

namespace {

double lattice_value(std::int64_t i, std::int64_t j, std::int64_t k) {
  std::uint64_t h = static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
  h ^= h >> 33;
  h *= 0xFF51AFD7ED558CCDull;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(const Vec3& p, double cell) {
  const Vec3 q = p / cell;
  const Vec3 base = q.array().floor();
  const Vec3 f = q - base;
  const auto i = static_cast<std::int64_t>(base.x());
  const auto j = static_cast<std::int64_t>(base.y());
  const auto k = static_cast<std::int64_t>(base.z());
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? f.x() : 1.0 - f.x()) * (dy ? f.y() : 1.0 - f.y()) *
                     (dz ? f.z() : 1.0 - f.z());
    acc += w * lattice_value(i + dx, j + dy, k + dz);
  }
  return acc;
}

}  // namespace

double surface_texture(const Vec3& point) {
  const double n = 0.65 * value_noise(point, 0.06) + 0.35 * value_noise(point, 0.023);
  return 0.1 + 0.8 * std::clamp(n, 0.0, 1.0);
}

SyntheticDisparitySource::SyntheticDisparitySource(Scene scene, CameraIntrinsics intrinsics,
                                                   double max_range, NoiseConfig noise)
    : scene_(std::move(scene)),
      intrinsics_(intrinsics),
      max_range_(max_range),
      noise_(noise),
      kappa_(intrinsics.fx * kNominalBaseline) {
  intrinsics_.validate();
  if (!(max_range > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_range must be positive");
  if (!(noise.relative_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative noise");
}

FrameObservation SyntheticDisparitySource::observe(const CameraPose& pose,
                                                   std::uint64_t seed) const {
  FrameObservation obs{DisparityMap(intrinsics_.width, intrinsics_.height),
                       DepthMap(intrinsics_.width, intrinsics_.height),
                       GrayImage(intrinsics_.width, intrinsics_.height), pose, 0.0};
  for (int v = 0; v < intrinsics_.height; ++v) {
    for (int u = 0; u < intrinsics_.width; ++u) {
      const RayHit hit = cast_pixel(scene_, pose, intrinsics_, u, v, max_range_);
      obs.true_depth.at(u, v) = hit.depth;
      obs.image.at(u, v) = hit.hit ? surface_texture(hit.point) : kBackgroundLuminance;
    }
  }

  const auto depth = obs.true_depth.values();
  double mean_depth = 0.0;
  for (double z : depth) mean_depth += z;
  mean_depth /= static_cast<double>(depth.size());
  obs.noise_sigma = noise_.relative_sigma * kappa_ / mean_depth;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto disparity = obs.disparity.values();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    double d = kappa_ / depth[i];
    if (obs.noise_sigma > 0.0) d = std::max(0.0, d + obs.noise_sigma * gauss(rng));
    disparity[i] = d;
  }
  return obs;
}

FrameObservation observe(const Scene& scene, const CameraPose& pose,
                         const CameraIntrinsics& intrinsics, double max_range, NoiseConfig noise,
                         std::uint64_t seed) {
  return SyntheticDisparitySource(scene, intrinsics, max_range, noise).observe(pose, seed);
}

std::vector<FeatureMatch> synthetic_matches(const Scene& scene, const CameraPose& pose_a,
                                            const CameraPose& pose_b,
                                            const CameraIntrinsics& intrinsics, std::size_t count,
                                            double jitter_px, std::uint64_t seed,
                                            const MatchSynthesisOptions& options) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  const ProjectionMatrix proj_b = compose_projection(intrinsics, pose_b);
  const Vec3 center_a = pose_a.center();
  const Vec3 center_b = pose_b.center();
  const double w = intrinsics.width - 1;
  const double h = intrinsics.height - 1;
  const auto inside = [&](const Vec2& p) {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= w && p.y() <= h;
  };
  const double min_parallax = options.min_parallax_deg * std::numbers::pi / 180.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<FeatureMatch> matches;
  const std::size_t max_attempts = count * static_cast<std::size_t>(options.max_attempts_per_match);
  for (std::size_t attempt = 0; attempt < max_attempts && matches.size() < count; ++attempt) {
    const double u = unit(rng) * w;
    const double v = unit(rng) * h;
    const RayHit hit = cast_pixel(scene, pose_a, intrinsics, u, v, options.max_range);
    if (!hit.hit) continue;
    const double depth_b = pose_b.to_camera(hit.point).z();
    if (!(depth_b > 0.0)) continue;
    const Vec2 pb = proj_b.project(hit.point);
    if (!inside(pb)) continue;
    const RayHit back = cast_pixel(scene, pose_b, intrinsics, pb.x(), pb.y(), options.max_range);
    if (!back.hit || std::abs(back.depth - depth_b) > 1e-6 * std::max(1.0, depth_b)) continue;
    if (min_parallax > 0.0) {
      const Vec3 ra = (hit.point - center_a).normalized();
      const Vec3 rb = (hit.point - center_b).normalized();
      if (std::acos(std::clamp(ra.dot(rb), -1.0, 1.0)) < min_parallax) continue;
    }

    FeatureMatch m;
    m.left_pixel = Vec2(u, v);
    m.right_pixel = pb;
    if (jitter_px > 0.0) {
      m.left_pixel += jitter_px * Vec2(gauss(rng), gauss(rng));
      m.right_pixel += jitter_px * Vec2(gauss(rng), gauss(rng));
      if (!inside(m.left_pixel) || !inside(m.right_pixel)) continue;
    }
    const double offset = (m.left_pixel - Vec2(u, v)).norm() + (m.right_pixel - pb).norm();
    m.best_distance = 10.0 + 30.0 * unit(rng) + 8.0 * offset;
    matches.push_back(m);
  }
  if (matches.size() < count) {
    throw Error(ErrorCode::InsufficientVisibleSurface,
                "found " + std::to_string(matches.size()) + " of " + std::to_string(count) +
                    " co-visible surface points");
  }

  // First ceil(0.85 n) slots get ratios that pass a 0.75 Lowe test, the rest
  // straddle it; the slots are then shuffled over the matches.
  const std::size_t strong = (count * 85 + 99) / 100;
  std::vector<double> ratios(count);
  for (std::size_t i = 0; i < count; ++i) {
    ratios[i] = i < strong ? 0.2 + 0.5 * unit(rng) : 0.7 + 0.25 * unit(rng);
  }
  std::shuffle(ratios.begin(), ratios.end(), rng);
  for (std::size_t i = 0; i < count; ++i) {
    matches[i].second_distance = matches[i].best_distance / ratios[i];
  }
  return matches;
}

FileDisparitySource::FileDisparitySource(const std::filesystem::path& directory) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec)) {
    throw Error(ErrorCode::IoError, "not a directory: " + directory.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file()) files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
}

std::optional<DisparityMap> FileDisparitySource::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  return read_disparity(files_[cursor_++]);
}

}  // namespace monofly
