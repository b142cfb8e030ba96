#include <algorithm>
#include <random>

#include "depth_fixture.hpp"
#include "doctest.h"
#include "monofly/metric_depth.hpp"

using namespace monofly;

TEST_CASE("scale_disparity with one anchor") {
  DisparityMap disp(2, 1);
  disp.at(0, 0) = 10.0;
  disp.at(1, 0) = 5.0;
  const std::vector<DepthAnchor> anchors{{Pixel{0, 0}, 2.0, 10.0}};
  const DepthMap out = scale_disparity(disp, anchors);
  CHECK(out.at(0, 0) == 2.0);
  CHECK(out.at(1, 0) == doctest::Approx(4.0));
}

TEST_CASE("scale_disparity averages the per-anchor maps") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 30.0);
  DisparityMap disp(12, 9);
  for (double& v : disp.values()) v = u(rng);
  std::vector<DepthAnchor> anchors;
  for (Pixel p : {Pixel{1, 1}, Pixel{7, 3}, Pixel{10, 8}}) {
    anchors.push_back({p, u(rng) * 0.3, disp[p] * (0.9 + 0.1 * (p.x % 3))});
  }
  const DepthMap out = scale_disparity(disp, anchors);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 12; ++x) {
      const double d = disp.at(x, y);
      const double a = anchors[0].depth * anchors[0].disparity / d;
      const double b = anchors[1].depth * anchors[1].disparity / d;
      const double c = anchors[2].depth * anchors[2].disparity / d;
      CHECK(out.at(x, y) == doctest::Approx((a + b + c) / 3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("scale_disparity errors and floor") {
  DisparityMap disp(2, 1, 0.0);
  CHECK_THROWS_WITH_AS(scale_disparity(disp, {}), doctest::Contains("NoAnchors"), Error);
  const std::vector<DepthAnchor> tiny{{Pixel{0, 0}, 2.0, 1e-4}};
  CHECK_THROWS_WITH_AS(scale_disparity(disp, tiny), doctest::Contains("AnchorDisparityTooSmall"), Error);
  // Zero disparity reads as the floor: far but finite.
  const std::vector<DepthAnchor> one{{Pixel{0, 0}, 2.0, 10.0}};
  CHECK(scale_disparity(disp, one).at(1, 0) == doctest::Approx(2.0 * 10.0 / kDisparityFloor));
}

TEST_CASE("min depth shift") {
  DepthMap uniform(3, 2, 5.0);
  const DepthMap two = apply_min_depth_shift(uniform, 2.0);
  for (double v : two.values()) CHECK(v == 2.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1.0, 20.0);
  DepthMap map(16, 16);
  for (double& v : map.values()) v = u(rng);
  const double current = *std::min_element(map.values().begin(), map.values().end());
  CHECK(apply_min_depth_shift(map, current) == map);

  const DepthMap out = apply_min_depth_shift(map, 0.7);
  const auto in = map.values();
  const auto res = out.values();
  CHECK(*std::min_element(res.begin(), res.end()) == 0.7);
  for (std::size_t i = 0; i + 1 < in.size(); ++i) {
    CHECK((in[i] < in[i + 1]) == (res[i] < res[i + 1]));
    CHECK(res[i] == doctest::Approx(in[i] - current + 0.7));
  }
}

TEST_CASE("smoothing window") {
  SmoothingWindow w(6);
  CHECK(w.update(3.0) == 3.0);

  SmoothingWindow e(6);
  for (int i = 0; i < 6; ++i) e.update(2.0);
  CHECK(e.update(8.0) == doctest::Approx(3.0));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  SmoothingWindow s(6);
  std::vector<double> all;
  for (int i = 0; i < 100; ++i) {
    all.push_back(u(rng));
    const double got = s.update(all.back());
    const std::size_t from = all.size() > 6 ? all.size() - 6 : 0;
    double sum = 0.0;
    for (std::size_t j = from; j < all.size(); ++j) sum += all[j];
    CHECK(got == doctest::Approx(sum / static_cast<double>(all.size() - from)).epsilon(1e-12));
  }

  auto [moved, mean] = update_window(SmoothingWindow(2), 4.0);
  CHECK(mean == 4.0);
  moved.shift_all(-5.0);
  CHECK(moved.mean() == 0.0);
}

TEST_CASE("dense depth from exact disparity and matches") {
  const auto rig = fixture::make_depth_rig();
  DepthEstimatorState state;
  const StereoFrame frame{rig.obs_left.disparity, rig.obs_left.image, rig.obs_right.image, rig.m(),
                          rig.m_prime()};
  const DepthEstimate est = estimate_metric_depth(frame, rig.matches, state);
  CHECK(est.anchors.size() == rig.matches.size());
  CHECK(est.z_min == doctest::Approx(5.0).epsilon(0.01));

  std::size_t good = 0, counted = 0;
  const auto truth = rig.obs_left.true_depth.values();
  const auto got = est.depth.values();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (got[i] >= est.z_max) continue;
    ++counted;
    if (std::abs(got[i] - truth[i]) < 0.01 * truth[i]) ++good;
  }
  REQUIRE(counted > truth.size() / 2);
  CHECK(good >= counted * 99 / 100);
}

TEST_CASE("dense depth is invariant to a global disparity scale") {
  const auto rig = fixture::make_depth_rig();
  DisparityMap scaled = rig.obs_left.disparity;
  for (double& v : scaled.values()) v *= 3.7;
  DepthEstimatorState s1, s2;
  const StereoFrame a{rig.obs_left.disparity, rig.obs_left.image, rig.obs_right.image, rig.m(), rig.m_prime()};
  const StereoFrame b{scaled, rig.obs_left.image, rig.obs_right.image, rig.m(), rig.m_prime()};
  const auto ea = estimate_metric_depth(a, rig.matches, s1);
  const auto eb = estimate_metric_depth(b, rig.matches, s2);
  const auto va = ea.depth.values();
  const auto vb = eb.depth.values();
  for (std::size_t i = 0; i < va.size(); ++i) CHECK(vb[i] == doctest::Approx(va[i]).epsilon(1e-9));
}

TEST_CASE("dense depth needs matches") {
  const auto rig = fixture::make_depth_rig();
  DepthEstimatorState state;
  const StereoFrame frame{rig.obs_left.disparity, rig.obs_left.image, rig.obs_right.image, rig.m(),
                          rig.m_prime()};
  CHECK_THROWS_WITH_AS(estimate_metric_depth(frame, {}, state), doctest::Contains("InsufficientMatches"),
                       Error);
  const StereoFrame same{rig.obs_left.disparity, rig.obs_left.image, rig.obs_right.image, rig.m(), rig.m()};
  CHECK_THROWS_WITH_AS(estimate_metric_depth(same, rig.matches, state),
                       doctest::Contains("DegenerateBaseline"), Error);
}
