// monofly: closed-loop monocular navigation simulator.
//
//   monofly run --scene scenes/two_stacks.scene --noise 0.05 --seed 3 --out out/
//   monofly render --scene scenes/two_stacks.scene --out frame.disp
//   monofly plan-once --scene scenes/two_stacks.scene --disparity frame.disp --out out/

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "monofly/harness.hpp"

namespace {

monofly::Vec3 parse_vec3(const std::string& text) {
  std::istringstream in(text);
  monofly::Vec3 v;
  char c1 = 0;
  char c2 = 0;
  if (!(in >> v.x() >> c1 >> v.y() >> c2 >> v.z()) || c1 != ',' || c2 != ',' || !in.eof()) {
    throw monofly::Error(monofly::ErrorCode::InvalidArgument, "expected X,Y,Z but got '" + text + "'");
  }
  return v;
}

struct Options {
  monofly::RunConfig config;
  std::string goal;
  std::string disparity;
  std::string out;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scene", o.config.scene_path, "scene file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--goal", o.goal, "goal X,Y,Z in meters (overrides the scene)");
  cmd->add_option("--resolution", o.config.resolution, "grid cell size in meters");
  cmd->add_option("--radius", o.config.radius, "grid half extent in meters");
  cmd->add_option("--pad", o.config.pad_cells, "obstacle padding in cells");
  cmd->add_option("--stride", o.config.stride, "depth pixel stride for the point cloud");
  cmd->add_option("--window", o.config.smoothing_window, "depth extreme smoothing window");
  cmd->add_option("--anchors", o.config.anchors, "matches kept after the ratio test");
  cmd->add_option("--noise", o.config.noise, "relative disparity noise");
  cmd->add_option("--seed", o.config.seed, "random seed");
  cmd->add_flag("--unknown-occupied", o.config.unknown_occupied,
                "treat cells outside the view or behind surfaces as occupied");
  cmd->add_flag("--fixed-yaw{false}", o.config.face_goal, "keep the start heading");
}

void print_record(const monofly::CycleRecord& r) {
  monofly::RunLog log;
  log.records.push_back(r);
  const std::string text = log.to_text();
  std::cout << text.substr(0, text.find('\n') + 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular depth to Fast Marching navigation simulator"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "fly from the scene start to the goal");
  add_common(run_cmd, o);
  run_cmd->add_option("--steps", o.config.max_steps, "maximum planning cycles");
  run_cmd->add_option("--out", o.out, "artifact directory");

  auto* once_cmd = app.add_subcommand("plan-once", "plan one cycle from a DISP frame at the start");
  add_common(once_cmd, o);
  once_cmd->add_option("--disparity", o.disparity, "DISP file")->required()->check(CLI::ExistingFile);
  once_cmd->add_option("--out", o.out, "artifact directory");

  auto* render_cmd = app.add_subcommand("render", "write the start view's synthetic disparity");
  add_common(render_cmd, o);
  render_cmd->add_option("--out", o.out, "DISP file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!o.goal.empty()) o.config.goal = parse_vec3(o.goal);
    const monofly::Scene scene = monofly::load_scene(o.config.scene_path);

    if (*run_cmd) {
      o.config.out_dir = o.out;
      const monofly::RunResult result = monofly::run(scene, o.config);
      const auto& log = result.log;
      std::cout << "termination=" << log.termination << " cycles=" << log.records.size()
                << " collisions=" << log.collisions << "\n";
      return result.exit_code;
    }

    const monofly::Simulation sim(scene, o.config);
    const monofly::DroneState state = sim.initial_state();
    if (*render_cmd) {
      const monofly::SyntheticDisparitySource source(scene, o.config.intrinsics,
                                                     o.config.max_range, {o.config.noise});
      const auto obs = source.observe(monofly::camera_pose_at(state.position, state.yaw), o.config.seed);
      monofly::write_disparity(o.out, obs.disparity);
      return 0;
    }

    monofly::CycleProducts products;
    const auto record = sim.plan_once(state, monofly::read_disparity(o.disparity), &products);
    print_record(record);
    if (!o.out.empty()) {
      std::filesystem::create_directories(o.out);
      const std::filesystem::path dir(o.out);
      if (products.depth) {
        monofly::write_file_bytes(dir / "depth.pgm",
                                  monofly::encode_depth_pgm(*products.depth, o.config.max_range));
      }
      if (products.grid) {
        const int layer = products.grid->vehicle_cell().z;
        monofly::write_file_bytes(dir / "occupancy.pgm", monofly::encode_slice_pgm(*products.grid, layer));
        monofly::write_file_bytes(dir / "plan.ppm",
                                  monofly::encode_path_ppm(*products.grid, layer, products.path));
      }
    }
    return record.status == "planning_failed" ? 2 : 0;
  } catch (const monofly::Error& e) {
    std::cerr << "error: " << monofly::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
