#include "monofly/camera_geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace monofly {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

CameraPose CameraPose::from_center(const Mat3& rotation, const Vec3& center) {
  return CameraPose{rotation, -rotation * center};
}

void CameraPose::validate() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = rotation.determinant();
  if (!(ortho <= 1e-9) || !(std::abs(det - 1.0) <= 1e-9)) {
    throw Error(ErrorCode::InvalidArgument, "rotation is not a proper orthonormal matrix");
  }
  if (!translation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "translation is not finite");
  }
}

double ProjectionMatrix::depth_of(const Vec3& world) const {
  const Eigen::Matrix3d b = m_.leftCols<3>();
  const double w = project_homogeneous(world).z();
  const double sign = b.determinant() < 0.0 ? -1.0 : 1.0;
  return sign * w / b.row(2).norm();
}

Vec3 ProjectionMatrix::camera_center() const {
  const Eigen::Matrix3d b = m_.leftCols<3>();
  return -b.partialPivLu().solve(m_.col(3));
}

ProjectionMatrix compose_projection(const CameraIntrinsics& intrinsics,
                                    const CameraPose& pose) {
  Mat34 rt;
  rt.leftCols<3>() = pose.rotation;
  rt.col(3) = pose.translation;
  return ProjectionMatrix(intrinsics.matrix() * rt);
}

Mat4 build_triangulation_matrix(const PixelMatch& match, const ProjectionMatrix& m,
                                const ProjectionMatrix& m_prime) {
  Mat4 a;
  a.row(0) = match.p.x() * m.row(2) - m.row(0);
  a.row(1) = match.p.y() * m.row(2) - m.row(1);
  a.row(2) = match.p_prime.x() * m_prime.row(2) - m_prime.row(0);
  a.row(3) = match.p_prime.y() * m_prime.row(2) - m_prime.row(1);
  return a;
}

ScenePoint triangulate(const PixelMatch& match, const ProjectionMatrix& m,
                       const ProjectionMatrix& m_prime, double baseline_min) {
  const double baseline = (m.camera_center() - m_prime.camera_center()).norm();
  if (!(baseline >= baseline_min)) {
    std::ostringstream os;
    os << "camera centers " << baseline << " m apart (minimum " << baseline_min << ")";
    throw Error(ErrorCode::DegenerateBaseline, os.str());
  }

  Mat4 a = build_triangulation_matrix(match, m, m_prime);
  // Unit-norm rows leave the null space unchanged and even out the scale
  // between pixel-weighted and plain rows.
  for (int i = 0; i < 4; ++i) {
    const double n = a.row(i).norm();
    if (n > 0.0) a.row(i) /= n;
  }

  Eigen::JacobiSVD<Mat4> svd(a, Eigen::ComputeFullV);
  const Vec4 x = svd.matrixV().col(3);
  if (!(std::abs(x(3)) >= 1e-12)) {
    throw Error(ErrorCode::PointAtInfinity, "homogeneous scale vanishes");
  }
  return x.head<3>() / x(3);
}

double soft_l1(double x) {
  if (!(x >= 0.0)) {
    throw Error(ErrorCode::DomainError, "soft_l1 expects a nonnegative squared residual");
  }
  return 2.0 * (std::sqrt(1.0 + x) - 1.0);
}

double soft_l1_derivative(double x) {
  if (!(x >= 0.0)) {
    throw Error(ErrorCode::DomainError, "soft_l1 expects a nonnegative squared residual");
  }
  return 1.0 / std::sqrt(1.0 + x);
}

namespace {

void require_in_front(const ScenePoint& point, const ProjectionMatrix& m,
                      const ProjectionMatrix& m_prime) {
  if (!(m.depth_of(point) > 0.0) || !(m_prime.depth_of(point) > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "point has nonpositive depth in a camera");
  }
}

// d(project(X))/dX for one camera.
Eigen::Matrix<double, 2, 3> projection_jacobian(const ProjectionMatrix& cam,
                                                const ScenePoint& point) {
  const Mat34& m = cam.matrix();
  const Vec3 h = cam.project_homogeneous(point);
  const double w = h.z();
  Eigen::Matrix<double, 2, 3> j;
  j.row(0) = (m.block<1, 3>(0, 0) * w - h.x() * m.block<1, 3>(2, 0)) / (w * w);
  j.row(1) = (m.block<1, 3>(1, 0) * w - h.y() * m.block<1, 3>(2, 0)) / (w * w);
  return j;
}

double robust_from_residuals(const Vec4& r) {
  return soft_l1(r.head<2>().squaredNorm()) + soft_l1(r.tail<2>().squaredNorm());
}

}  // namespace

Vec4 reprojection_residuals(const ScenePoint& point, const PixelMatch& match,
                            const ProjectionMatrix& m, const ProjectionMatrix& m_prime) {
  require_in_front(point, m, m_prime);
  Vec4 r;
  r.head<2>() = match.p - m.project(point);
  r.tail<2>() = match.p_prime - m_prime.project(point);
  return r;
}

Eigen::Matrix<double, 4, 3> reprojection_jacobian(const ScenePoint& point,
                                                  const ProjectionMatrix& m,
                                                  const ProjectionMatrix& m_prime) {
  require_in_front(point, m, m_prime);
  Eigen::Matrix<double, 4, 3> j;
  j.topRows<2>() = -projection_jacobian(m, point);
  j.bottomRows<2>() = -projection_jacobian(m_prime, point);
  return j;
}

double reprojection_objective(const ScenePoint& point, const PixelMatch& match,
                              const ProjectionMatrix& m, const ProjectionMatrix& m_prime) {
  return reprojection_residuals(point, match, m, m_prime).squaredNorm();
}

double robust_objective(const ScenePoint& point, const PixelMatch& match,
                        const ProjectionMatrix& m, const ProjectionMatrix& m_prime) {
  return robust_from_residuals(reprojection_residuals(point, match, m, m_prime));
}

RefineReport refine_point_report(const ScenePoint& initial, const PixelMatch& match,
                                 const ProjectionMatrix& m,
                                 const ProjectionMatrix& m_prime,
                                 const RefineConfig& config) {
  RefineReport report;
  ScenePoint x = initial;
  Vec4 r = reprojection_residuals(x, match, m, m_prime);
  double f = robust_from_residuals(r);
  if (!std::isfinite(f)) throw Error(ErrorCode::NonFinite, "initial objective");
  report.initial_objective = f;

  double lambda = -1.0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    report.iterations = iter + 1;
    const Eigen::Matrix<double, 4, 3> j = reprojection_jacobian(x, m, m_prime);
    if (!j.allFinite()) throw Error(ErrorCode::NonFinite, "jacobian");

    // Per-image IRLS weights rho'(s); gradient of sum rho(|r_i|^2) is
    // sum 2 rho'(s_i) J_i^T r_i.
    const double w_left = soft_l1_derivative(r.head<2>().squaredNorm());
    const double w_right = soft_l1_derivative(r.tail<2>().squaredNorm());
    const auto j_left = j.topRows<2>();
    const auto j_right = j.bottomRows<2>();
    const Vec3 g = 2.0 * (w_left * j_left.transpose() * r.head<2>() +
                          w_right * j_right.transpose() * r.tail<2>());
    const Mat3 h = 2.0 * (w_left * j_left.transpose() * j_left +
                          w_right * j_right.transpose() * j_right);
    if (!g.allFinite() || !h.allFinite()) throw Error(ErrorCode::NonFinite, "gradient");
    if (g.norm() < config.g_tol) break;

    if (lambda < 0.0) lambda = 1e-3 * h.diagonal().maxCoeff();
    const Vec3 damping = h.diagonal().cwiseMax(1e-12 * h.diagonal().maxCoeff() + 1e-300);
    Mat3 lhs = h;
    lhs.diagonal() += lambda * damping;
    const Vec3 step = lhs.ldlt().solve(-g);
    if (!step.allFinite()) throw Error(ErrorCode::NonFinite, "step");

    const ScenePoint candidate = x + step;
    bool accepted = false;
    if (m.depth_of(candidate) > 0.0 && m_prime.depth_of(candidate) > 0.0) {
      const Vec4 r_new = reprojection_residuals(candidate, match, m, m_prime);
      const double f_new = robust_from_residuals(r_new);
      if (!std::isfinite(f_new)) throw Error(ErrorCode::NonFinite, "objective");
      if (f_new < f) {
        x = candidate;
        r = r_new;
        f = f_new;
        accepted = true;
        ++report.accepted_steps;
      }
    }
    lambda = accepted ? lambda / 3.0 : lambda * 4.0;
    if (step.norm() < config.x_tol * (x.norm() + config.x_tol)) break;
  }

  report.point = x;
  report.final_objective = f;
  return report;
}

}  // namespace monofly
