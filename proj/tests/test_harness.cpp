#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "doctest.h"
#include "monofly/harness.hpp"

using namespace monofly;

namespace {

std::filesystem::path scene_file(const char* name) {
  return std::filesystem::path(MONOFLY_SCENE_DIR) / (std::string(name) + ".scene");
}

RunConfig config_for(const char* name) {
  RunConfig c;
  c.scene_path = scene_file(name);
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("free space: five cells ahead takes two cycles") {
  RunConfig c = config_for("open");
  c.goal = Vec3(0.0, 1.25, 1.0);  // start is (0, 0, 1) facing +y
  const RunResult r = run(c);
  CHECK(r.log.goal_reached);
  CHECK(r.exit_code == 0);
  CHECK(r.log.records.size() == 2);
  CHECK(r.log.records[0].committed.size() == 3);
  CHECK(r.log.records[1].committed.size() == 2);
}

TEST_CASE("open scene makes steady progress") {
  const RunResult r = run(config_for("open"));
  REQUIRE(r.log.goal_reached);
  CHECK(r.log.collisions == 0);
  for (std::size_t i = 1; i < r.log.records.size(); ++i) {
    CHECK(r.log.records[i].goal_distance < r.log.records[i - 1].goal_distance);
  }
}

TEST_CASE("single stack") {
  RunConfig c = config_for("single_stack");
  c.noise = 0.05;
  c.unknown_occupied = true;
  const RunResult r = run(c);
  CHECK(r.log.goal_reached);
  CHECK(r.log.collisions == 0);
  CHECK(r.log.to_text().find("goal_reached=1") != std::string::npos);
}

TEST_CASE("goal inside a box ends without a collision") {
  RunConfig c = config_for("goal_in_box");
  c.goal = Vec3(0.0, 6.0, 1.5);
  c.max_steps = 40;
  c.unknown_occupied = true;
  const RunResult r = run(c);
  CHECK(!r.log.goal_reached);
  CHECK(r.log.collisions == 0);
  CHECK(r.log.termination == "planning_failed");
  CHECK(r.exit_code == 2);
}

TEST_CASE("identical seeds give identical logs and artifacts") {
  const auto base = std::filesystem::temp_directory_path() / "monofly_determinism";
  std::filesystem::remove_all(base);
  RunConfig c = config_for("single_stack");
  c.noise = 0.05;
  c.seed = 9;
  c.max_steps = 8;
  c.out_dir = base / "a";
  const RunResult a = run(c);
  c.out_dir = base / "b";
  const RunResult b = run(c);
  CHECK(a.log.to_text() == b.log.to_text());

  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(base / "a")) {
    ++files;
    CHECK(slurp(entry.path()) == slurp(base / "b" / entry.path().filename()));
  }
  CHECK(files > 1);
  CHECK(std::filesystem::exists(base / "a" / "run.log"));

  c.seed = 10;
  c.out_dir.clear();
  CHECK(run(c).log.to_text() != a.log.to_text());
  std::filesystem::remove_all(base);
}

TEST_CASE("plan once from a rendered frame") {
  const RunConfig c = config_for("two_stacks");
  const Scene scene = load_scene(c.scene_path);
  const Simulation sim(scene, c);
  const DroneState s = sim.initial_state();
  CHECK(s.yaw == doctest::Approx(std::numbers::pi / 2));
  const SyntheticDisparitySource source(scene, c.intrinsics, c.max_range);
  const auto obs = source.observe(camera_pose_at(s.position, s.yaw), 1);
  CycleProducts products;
  const CycleRecord rec = sim.plan_once(s, obs.disparity, &products);
  CHECK(rec.status == "ok");
  CHECK(rec.plan_length > 0);
  REQUIRE(products.grid);
  CHECK(products.grid->occupied_count() > 0);
  CHECK(!products.path.empty());
}

TEST_CASE("frame conversions") {
  const RunConfig c = config_for("open");
  const Simulation sim(load_scene(c.scene_path), c);
  DroneState s;
  s.position = Vec3(1, 2, 3);
  s.yaw = std::numbers::pi / 2;  // body forward = world +y, body right = world +x
  const Vec3 step = sim.body_step_to_world(s, Action{0, 1, 0});
  CHECK((step - Vec3(0, c.resolution, 0)).norm() < 1e-12);
  const Vec3 right = sim.body_step_to_world(s, Action{1, 0, 0});
  CHECK((right - Vec3(c.resolution, 0, 0)).norm() < 1e-12);
}

TEST_CASE("configuration errors") {
  RunConfig c = config_for("open");
  c.resolution = -1.0;
  CHECK_THROWS_AS(run(c), Error);
  RunConfig missing;
  missing.scene_path = "/nonexistent.scene";
  CHECK_THROWS_WITH_AS(run(missing), doctest::Contains("IoError"), Error);
}
