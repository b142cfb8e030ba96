#pragma once

// A small rig for the dense-depth tests: a wall with a box in front of it,
// seen by two cameras half a meter apart. Depths are chosen so that both
// surfaces shift by whole pixels between the views.

#include <numbers>
#include <vector>

#include "monofly/disparity_source.hpp"
#include "monofly/metric_depth.hpp"

namespace fixture {

using namespace monofly;

struct DepthRig {
  Scene scene;
  CameraIntrinsics k{500.0, 500.0, 79.5, 59.5, 160, 120};
  CameraPose left, right;
  FrameObservation obs_left, obs_right;
  std::vector<PixelMatch> matches;

  ProjectionMatrix m() const { return compose_projection(k, left); }
  ProjectionMatrix m_prime() const { return compose_projection(k, right); }
};

// Matches come from casting rays through integer pixels of the left view and
// projecting the hit into the right one.
inline DepthRig make_depth_rig() {
  DepthRig rig;
  // fx * b = 250, so the box face (5 m) moves 50 px, the wall (6.25 m) 40 px
  // and the backdrop (10 m) 25 px. The backdrop is the farthest surface and
  // ends up at the depth ceiling; the wall covers the left part of the view.
  rig.scene.boxes.push_back({Vec3(-0.15, 5.0, -0.3), Vec3(0.65, 5.5, 0.3)});
  rig.scene.boxes.push_back({Vec3(-20.0, 6.25, -20.0), Vec3(0.3, 7.0, 20.0)});
  rig.scene.boxes.push_back({Vec3(-30.0, 10.0, -30.0), Vec3(30.0, 11.0, 30.0)});
  const double yaw = std::numbers::pi / 2.0;
  rig.left = camera_pose_at(Vec3::Zero(), yaw);
  rig.right = camera_pose_at(Vec3(0.5, 0.0, 0.0), yaw);
  rig.obs_left = observe(rig.scene, rig.left, rig.k, 20.0, {}, 1);
  rig.obs_right = observe(rig.scene, rig.right, rig.k, 20.0, {}, 2);

  const ProjectionMatrix mp = rig.m_prime();
  for (int v = 20; v <= 100; v += 20) {
    for (int u = 20; u <= 140; u += 30) {
      const RayHit hit = cast_pixel(rig.scene, rig.left, rig.k, u, v, 20.0);
      if (!hit.hit) continue;
      rig.matches.push_back({Vec2(u, v), mp.project(hit.point)});
    }
  }
  return rig;
}

}  // namespace fixture
