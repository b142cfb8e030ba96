#pragma once

// Pinhole projection, two-view linear triangulation and robust
// reprojection refinement of a single scene point.

#include <Eigen/Core>

#include "monofly/error.hpp"

namespace monofly {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws InvalidArgument when focal lengths or principal point are off.
  void validate() const;
  Mat3 matrix() const;
};

// World-to-camera extrinsics: x_cam = rotation * x_world + translation.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  // Builds the extrinsics of a camera with the given world-to-camera
  // rotation whose optical center sits at `center` in world coordinates.
  static CameraPose from_center(const Mat3& rotation, const Vec3& center);

  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  void validate() const;
};

// The 3x4 camera matrix K [R | t].
class ProjectionMatrix {
 public:
  ProjectionMatrix() : m_(Mat34::Zero()) {}
  explicit ProjectionMatrix(const Mat34& m) : m_(m) {}

  const Mat34& matrix() const { return m_; }
  Eigen::RowVector4d row(int i) const { return m_.row(i); }

  // Homogeneous image of a world point (third component is the scaled depth).
  Vec3 project_homogeneous(const Vec3& world) const {
    return m_.leftCols<3>() * world + m_.col(3);
  }
  // Dehomogenized pixel; undefined when the point lies on the principal plane.
  Vec2 project(const Vec3& world) const {
    const Vec3 h = project_homogeneous(world);
    return h.head<2>() / h.z();
  }
  // Signed depth of the point along this camera's optical axis, in the units
  // of the world frame, independent of the overall scale of the matrix.
  double depth_of(const Vec3& world) const;
  Vec3 camera_center() const;

 private:
  Mat34 m_;
};

// A corresponding pixel pair: p in the first ("left") image and p_prime in
// the second ("right") image. Homogeneous coordinates are [x, y, 1].
struct PixelMatch {
  Vec2 p = Vec2::Zero();
  Vec2 p_prime = Vec2::Zero();

  Vec3 p_homogeneous() const { return {p.x(), p.y(), 1.0}; }
  Vec3 p_prime_homogeneous() const { return {p_prime.x(), p_prime.y(), 1.0}; }
};

using ScenePoint = Vec3;

inline constexpr double kBaselineMin = 0.01;

struct RefineConfig {
  double g_tol = 1e-8;
  double x_tol = 1e-10;
  int max_iters = 50;
};

ProjectionMatrix compose_projection(const CameraIntrinsics& intrinsics,
                                    const CameraPose& pose);

// Rows: x_l*M3 - M1, y_l*M3 - M2, x_r*M'3 - M'1, y_r*M'3 - M'2.
Mat4 build_triangulation_matrix(const PixelMatch& match,
                                const ProjectionMatrix& m,
                                const ProjectionMatrix& m_prime);

// Linear (DLT) triangulation via the smallest right-singular vector of A.
// Throws DegenerateBaseline when the camera centers are closer than
// `baseline_min` and PointAtInfinity when the null vector has no finite
// dehomogenization.
ScenePoint triangulate(const PixelMatch& match, const ProjectionMatrix& m,
                       const ProjectionMatrix& m_prime,
                       double baseline_min = kBaselineMin);

// Soft-L1 robust loss 2(sqrt(1 + x) - 1) on a squared residual x >= 0.
double soft_l1(double x);
double soft_l1_derivative(double x);

// Observed minus predicted pixel, stacked [left x, left y, right x, right y].
Vec4 reprojection_residuals(const ScenePoint& point, const PixelMatch& match,
                            const ProjectionMatrix& m,
                            const ProjectionMatrix& m_prime);

// d(residuals)/d(point), analytic.
Eigen::Matrix<double, 4, 3> reprojection_jacobian(const ScenePoint& point,
                                                  const ProjectionMatrix& m,
                                                  const ProjectionMatrix& m_prime);

// Plain squared reprojection error summed over both images.
double reprojection_objective(const ScenePoint& point, const PixelMatch& match,
                              const ProjectionMatrix& m,
                              const ProjectionMatrix& m_prime);

// soft_l1 applied to each image's squared residual norm, then summed.
double robust_objective(const ScenePoint& point, const PixelMatch& match,
                        const ProjectionMatrix& m,
                        const ProjectionMatrix& m_prime);

struct RefineReport {
  ScenePoint point = ScenePoint::Zero();
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
};

// Levenberg-Marquardt trust-region iteration on the IRLS-weighted residuals.
// Never returns a point whose robust objective exceeds that of `initial`.
RefineReport refine_point_report(const ScenePoint& initial, const PixelMatch& match,
                                 const ProjectionMatrix& m,
                                 const ProjectionMatrix& m_prime,
                                 const RefineConfig& config = {});

inline ScenePoint refine_point(const ScenePoint& initial, const PixelMatch& match,
                               const ProjectionMatrix& m,
                               const ProjectionMatrix& m_prime,
                               const RefineConfig& config = {}) {
  return refine_point_report(initial, match, m, m_prime, config).point;
}

}  // namespace monofly
