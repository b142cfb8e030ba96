#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "monofly/disparity_source.hpp"
#include "oracles.hpp"

using namespace monofly;

namespace {

const CameraIntrinsics kSmall{100.0, 100.0, 79.5, 59.5, 160, 120};

Scene random_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-8.0, 8.0), size(0.2, 3.0);
  Scene scene;
  while (scene.boxes.size() < 6) {
    const Vec3 lo(pos(rng), pos(rng), pos(rng));
    const Box b{lo, lo + Vec3(size(rng), size(rng), size(rng))};
    if (!b.contains(Vec3::Zero(), 0.5)) scene.boxes.push_back(b);
  }
  return scene;
}

}  // namespace

TEST_CASE("center ray hits a box face 3 m ahead") {
  Scene scene;
  scene.boxes.push_back({Vec3(-1, 3, -1), Vec3(1, 4, 1)});
  const CameraIntrinsics k{100, 100, 80, 60, 161, 121};
  const auto pose = camera_pose_at(Vec3::Zero(), std::numbers::pi / 2);
  const DepthMap depth = raycast_depth(scene, pose, k, 20.0);
  CHECK(depth.at(80, 60) == doctest::Approx(3.0).epsilon(1e-12));
  const RayHit hit = cast_pixel(scene, pose, k, 80, 60, 20.0);
  CHECK(hit.hit);
  CHECK((hit.point - Vec3(0, 3, 0)).norm() < 1e-12);
}

TEST_CASE("empty scene reads max range everywhere") {
  const DepthMap depth = raycast_depth(Scene{}, camera_pose_at(Vec3::Zero(), 0.3), kSmall, 17.0);
  for (double v : depth.values()) CHECK(v == 17.0);
}

TEST_CASE("slab test equals the per-face oracle") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  int hits = 0;
  for (int s = 0; s < 10; ++s) {
    const Scene scene = random_scene(rng);
    for (int r = 0; r < 300; ++r) {
      const Vec3 dir(g(rng), g(rng), g(rng));
      for (const auto& box : scene.boxes) {
        const auto got = ray_box_entry(Vec3::Zero(), dir, box);
        const auto want = oracle::ray_box_faces(Vec3::Zero(), dir, box.min, box.max);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
          ++hits;
          CHECK(*got == doctest::Approx(*want).epsilon(1e-12));
        }
      }
    }
  }
  CHECK(hits > 50);
}

TEST_CASE("raycast is mirror symmetric for a symmetric scene") {
  Scene scene;
  scene.boxes.push_back({Vec3(-2, 4, -1), Vec3(-0.5, 5, 1)});
  scene.boxes.push_back({Vec3(0.5, 4, -1), Vec3(2, 5, 1)});
  scene.boxes.push_back({Vec3(-3, 8, -3), Vec3(3, 9, 3)});
  const CameraIntrinsics k{100, 100, 80, 60, 161, 121};
  const DepthMap depth = raycast_depth(scene, camera_pose_at(Vec3::Zero(), std::numbers::pi / 2), k, 20.0);
  for (int v = 0; v < 121; ++v) {
    for (int u = 0; u < 161; ++u) CHECK(depth.at(u, v) == doctest::Approx(depth.at(160 - u, v)));
  }
}

TEST_CASE("noiseless disparity times depth is constant") {
  Scene scene;
  scene.boxes.push_back({Vec3(-3, 4, -3), Vec3(3, 5, 3)});
  const SyntheticDisparitySource source(scene, kSmall, 20.0);
  const auto obs = source.observe(camera_pose_at(Vec3::Zero(), std::numbers::pi / 2), 1);
  const auto d = obs.disparity.values();
  const auto z = obs.true_depth.values();
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] * z[i] == doctest::Approx(source.kappa()));
  CHECK(source.kappa() == doctest::Approx(kSmall.fx * SyntheticDisparitySource::kNominalBaseline));
}

TEST_CASE("disparity noise statistics and determinism") {
  Scene scene;
  scene.boxes.push_back({Vec3(-30, 6, -30), Vec3(30, 7, 30)});
  const CameraIntrinsics k{300, 300, 199.5, 149.5, 400, 300};  // 1.2e5 pixels
  const auto pose = camera_pose_at(Vec3::Zero(), std::numbers::pi / 2);
  const SyntheticDisparitySource clean(scene, k, 50.0);
  const SyntheticDisparitySource noisy(scene, k, 50.0, {0.05});
  const auto a = clean.observe(pose, 9);
  const auto b = noisy.observe(pose, 9);
  const auto b2 = noisy.observe(pose, 9);
  CHECK(b.disparity == b2.disparity);

  double zbar = 0.0;
  for (double z : a.true_depth.values()) zbar += z;
  zbar /= static_cast<double>(a.true_depth.size());
  const double sigma = 0.05 * clean.kappa() / zbar;

  const auto da = a.disparity.values();
  const auto db = b.disparity.values();
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double e = db[i] - da[i];
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(da.size());
  const double std_dev = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(std::abs(std_dev - sigma) < 0.05 * sigma);
}

TEST_CASE("synthetic matches") {
  Scene scene;
  scene.boxes.push_back({Vec3(-3, 4, -3), Vec3(3, 5, 3)});
  scene.boxes.push_back({Vec3(-0.5, 2.5, -0.5), Vec3(0.5, 3, 0.5)});
  const auto a = camera_pose_at(Vec3::Zero(), std::numbers::pi / 2);
  const auto b = camera_pose_at(Vec3(0.2, 0.1, 0.0), std::numbers::pi / 2);
  const auto m = synthetic_matches(scene, a, b, kSmall, 16, 0.0, 5);
  REQUIRE(m.size() == 16);
  const auto again = synthetic_matches(scene, a, b, kSmall, 16, 0.0, 5);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m[i].left_pixel == again[i].left_pixel);
    CHECK(m[i].right_pixel == again[i].right_pixel);
    CHECK(m[i].best_distance == again[i].best_distance);
  }

  const auto ma = compose_projection(kSmall, a);
  const auto mb = compose_projection(kSmall, b);
  for (const auto& f : m) {
    const Vec3 q = triangulate(f.pixel_match(), ma, mb);
    // The recovered point must be on a box surface and project back onto the left pixel.
    double surface = 1e9;
    for (const auto& box : scene.boxes) surface = std::min(surface, box.distance(q));
    CHECK(surface < 1e-6);
    const RayHit hit = cast_pixel(scene, a, kSmall, f.left_pixel.x(), f.left_pixel.y(), 20.0);
    CHECK((hit.point - q).norm() < 1e-6);
  }

  CHECK_THROWS_WITH_AS(synthetic_matches(Scene{}, a, b, kSmall, 4, 0.0, 1),
                       doctest::Contains("InsufficientVisibleSurface"), Error);
}

TEST_CASE("scene parsing") {
  std::istringstream good(
      "# two boxes\n"
      "bounds -5 -1 0 5 10 5\n"
      "start 0 0 1 90\n"
      "goal 0 8 1   # ahead\n"
      "box -1 4 0 1 5 3\n");
  const Scene scene = parse_scene(good);
  CHECK(scene.boxes.size() == 1);
  CHECK(scene.goal.has_value());
  CHECK(scene.start_yaw_deg == 90.0);

  std::istringstream bad("start 0 0 1 90\n\nbox 1 2 3\n");
  CHECK_THROWS_WITH_AS(parse_scene(bad), doctest::Contains("line 3"), Error);
  std::istringstream unknown("cone 1 2 3\n");
  CHECK_THROWS_WITH_AS(parse_scene(unknown), doctest::Contains("SceneParseError"), Error);
  std::istringstream inside("start 0 0 1 90\nbox -1 -1 0 1 1 2\n");
  CHECK_THROWS_AS(parse_scene(inside), Error);
  CHECK_THROWS_WITH_AS(load_scene("/nonexistent/scene"), doctest::Contains("IoError"), Error);
}

TEST_CASE("bundled scenes load") {
  for (const char* name : {"two_stacks", "single_stack", "open", "goal_in_box"}) {
    CHECK_NOTHROW(load_scene(std::filesystem::path(MONOFLY_SCENE_DIR) / (std::string(name) + ".scene")));
  }
}

TEST_CASE("disparity file round trip and replay") {
  const auto dir = std::filesystem::temp_directory_path() / "monofly_disp_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  DisparityMap a(7, 5), b(7, 5);
  for (double& v : a.values()) v = static_cast<float>(u(rng));
  for (double& v : b.values()) v = static_cast<float>(u(rng));
  write_disparity(dir / "f_002.disp", b);
  write_disparity(dir / "f_001.disp", a);
  CHECK(read_disparity(dir / "f_001.disp") == a);
  CHECK(read_file_bytes(dir / "f_001.disp") ==
        encode_raster(read_disparity(dir / "f_001.disp")));

  FileDisparitySource replay(dir);
  CHECK(replay.frame_count() == 2);
  CHECK(*replay.next() == a);
  CHECK(*replay.next() == b);
  CHECK(!replay.next());

  const std::vector<std::uint8_t> junk{1, 2, 3};
  CHECK_THROWS_AS(decode_disparity(junk), Error);
  std::filesystem::remove_all(dir);
}
