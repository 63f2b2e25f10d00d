// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/core/gaussian_math.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace hsplat {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

void CameraPose::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("CameraPose: fx, fy must be > 0");
  if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height)) {
    throw std::invalid_argument("CameraPose: principal point outside image");
  }
  const Eigen::Matrix3d r = rotation();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw std::invalid_argument("CameraPose: rotation block not orthonormal");
  }
  if (r.determinant() < 0) throw std::invalid_argument("CameraPose: rotation determinant not +1");
  if ((world_to_cam.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("CameraPose: bottom row must be (0,0,0,1)");
  }
}

void ReferenceBundle::validate() const {
  if (frames.empty()) throw std::invalid_argument("ReferenceBundle: no frames");
  const int h = frames[0].image.height, w = frames[0].image.width;
  for (size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.image.height != h || f.image.width != w || f.image.channels != 3) {
      throw std::invalid_argument("ReferenceBundle: frame " + std::to_string(i) +
                                  " image shape mismatch");
    }
    if (f.pointmap.height != h || f.pointmap.width != w || f.pointmap.channels != 3) {
      throw std::invalid_argument("ReferenceBundle: frame " + std::to_string(i) +
                                  " pointmap shape mismatch");
    }
    if (f.featmap.height != h || f.featmap.width != w || f.featmap.channels != feature_dim) {
      throw std::invalid_argument("ReferenceBundle: frame " + std::to_string(i) +
                                  " featmap shape mismatch");
    }
    if (f.dyn_mask && (f.dyn_mask->height != h || f.dyn_mask->width != w)) {
      throw std::invalid_argument("ReferenceBundle: frame " + std::to_string(i) +
                                  " mask shape mismatch");
    }
    if (f.pose.timestamp_index != static_cast<int>(i)) {
      throw std::invalid_argument("ReferenceBundle: timestamps must be 0..T-1 in order (frame " +
                                  std::to_string(i) + ")");
    }
    f.pose.validate();
  }
}

Eigen::Matrix3d rotation_from_quaternion(const Eigen::Vector4d& q) {
  const double n = q.norm();
  if (n < 1e-12) throw std::invalid_argument("rotation_from_quaternion: zero-norm quaternion");
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Eigen::Matrix3d covariance_from_rotation_scale(const Eigen::Vector4d& rotation,
                                               const Eigen::Vector3d& log_scale) {
  const Eigen::Matrix3d r = rotation_from_quaternion(rotation);
  const Eigen::Vector3d s = log_scale.array().exp();
  const Eigen::Matrix3d m = r * s.asDiagonal();
  Eigen::Matrix3d sigma = m * m.transpose();
  return 0.5 * (sigma + sigma.transpose());  // exact symmetry
}

namespace {

// d(R)/d(unit quaternion component), for q_hat = (w, x, y, z).
void rotation_quat_jacobian(const Eigen::Vector4d& qh, Eigen::Matrix3d dr[4]) {
  const double w = qh[0], x = qh[1], y = qh[2], z = qh[3];
  dr[0] << 0, -2 * z, 2 * y,
      2 * z, 0, -2 * x,
      -2 * y, 2 * x, 0;
  dr[1] << 0, 2 * y, 2 * z,
      2 * y, -4 * x, -2 * w,
      2 * z, 2 * w, -4 * x;
  dr[2] << -4 * y, 2 * x, 2 * w,
      2 * x, 0, 2 * z,
      -2 * w, 2 * z, -4 * y;
  dr[3] << -4 * z, -2 * w, 2 * x,
      2 * w, -4 * z, 2 * y,
      2 * x, 2 * y, 0;
}

}  // namespace

void covariance_backward(const Eigen::Vector4d& rotation, const Eigen::Vector3d& log_scale,
                         const Eigen::Matrix3d& g_sigma, Eigen::Vector4d& g_rotation,
                         Eigen::Vector3d& g_log_scale) {
  const double n = rotation.norm();
  if (n < 1e-12) throw std::invalid_argument("covariance_backward: zero-norm quaternion");
  const Eigen::Vector4d qh = rotation / n;
  const Eigen::Matrix3d r = rotation_from_quaternion(rotation);
  const Eigen::Vector3d s = log_scale.array().exp();
  const Eigen::Matrix3d m = r * s.asDiagonal();

  // Sigma = M M^T with symmetric upstream gradient: dL/dM = 2 g M.
  const Eigen::Matrix3d g_m = 2.0 * g_sigma * m;
  const Eigen::Matrix3d g_r = g_m * s.asDiagonal();
  for (int k = 0; k < 3; ++k) {
    g_log_scale[k] = g_m.col(k).dot(r.col(k)) * s[k];
  }

  Eigen::Matrix3d dr[4];
  rotation_quat_jacobian(qh, dr);
  Eigen::Vector4d g_qh;
  for (int k = 0; k < 4; ++k) g_qh[k] = (g_r.array() * dr[k].array()).sum();
  // Through the normalization q_hat = q / |q|.
  g_rotation = (g_qh - qh * qh.dot(g_qh)) / n;
}

namespace {
// Basis constants of the real spherical harmonics, bands 0..3.
constexpr double kSH0 = 0.28209479177387814;
constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                            -1.0925484305920792, 0.5462742152960396};
constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                            0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};
}  // namespace

void sh_basis(const Eigen::Vector3d& dir, int degree, double* out) {
  const double x = dir[0], y = dir[1], z = dir[2];
  out[0] = kSH0;
  if (degree < 1) return;
  out[1] = -kSH1 * y;
  out[2] = kSH1 * z;
  out[3] = -kSH1 * x;
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  out[4] = kSH2[0] * x * y;
  out[5] = kSH2[1] * y * z;
  out[6] = kSH2[2] * (2 * zz - xx - yy);
  out[7] = kSH2[3] * x * z;
  out[8] = kSH2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kSH3[0] * y * (3 * xx - yy);
  out[10] = kSH3[1] * x * y * z;
  out[11] = kSH3[2] * y * (4 * zz - xx - yy);
  out[12] = kSH3[3] * z * (2 * zz - 3 * xx - 3 * yy);
  out[13] = kSH3[4] * x * (4 * zz - xx - yy);
  out[14] = kSH3[5] * z * (xx - yy);
  out[15] = kSH3[6] * x * (xx - 3 * yy);
}

void sh_basis_with_grad(const Eigen::Vector3d& dir, int degree, double* out,
                        Eigen::Vector3d* grad_out) {
  sh_basis(dir, degree, out);
  const double x = dir[0], y = dir[1], z = dir[2];
  grad_out[0].setZero();
  if (degree < 1) return;
  grad_out[1] = Eigen::Vector3d(0, -kSH1, 0);
  grad_out[2] = Eigen::Vector3d(0, 0, kSH1);
  grad_out[3] = Eigen::Vector3d(-kSH1, 0, 0);
  if (degree < 2) return;
  grad_out[4] = kSH2[0] * Eigen::Vector3d(y, x, 0);
  grad_out[5] = kSH2[1] * Eigen::Vector3d(0, z, y);
  grad_out[6] = kSH2[2] * Eigen::Vector3d(-2 * x, -2 * y, 4 * z);
  grad_out[7] = kSH2[3] * Eigen::Vector3d(z, 0, x);
  grad_out[8] = kSH2[4] * Eigen::Vector3d(2 * x, -2 * y, 0);
  if (degree < 3) return;
  grad_out[9] = kSH3[0] * Eigen::Vector3d(6 * x * y, 3 * x * x - 3 * y * y, 0);
  grad_out[10] = kSH3[1] * Eigen::Vector3d(y * z, x * z, x * y);
  grad_out[11] = kSH3[2] * Eigen::Vector3d(-2 * x * y, 4 * z * z - x * x - 3 * y * y, 8 * y * z);
  grad_out[12] = kSH3[3] * Eigen::Vector3d(-6 * x * z, -6 * y * z, 6 * z * z - 3 * x * x - 3 * y * y);
  grad_out[13] = kSH3[4] * Eigen::Vector3d(4 * z * z - 3 * x * x - y * y, -2 * x * y, 8 * x * z);
  grad_out[14] = kSH3[5] * Eigen::Vector3d(2 * x * z, -2 * y * z, x * x - y * y);
  grad_out[15] = kSH3[6] * Eigen::Vector3d(3 * x * x - 3 * y * y, -6 * x * y, 0);
}

Eigen::Vector3d eval_sh(const std::vector<Eigen::Vector3d>& sh_coeffs,
                        const Eigen::Vector3d& view_dir, int degree) {
  if (degree < 0 || degree > 3) throw std::invalid_argument("eval_sh: degree must be 0..3");
  const int n = sh_coeff_count(degree);
  if (static_cast<int>(sh_coeffs.size()) != n) {
    throw std::invalid_argument("eval_sh: coefficient count does not match degree");
  }
  double basis[16];
  sh_basis(view_dir, degree, basis);
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  for (int k = 0; k < n; ++k) rgb += basis[k] * sh_coeffs[k];
  rgb.array() += 0.5;
  return rgb.cwiseMax(0.0);
}

ProjectedPoint project_point(const CameraPose& pose, const Eigen::Vector3d& x_world) {
  ProjectedPoint p;
  p.cam = pose.rotation() * x_world + pose.translation();
  p.depth = p.cam.z();
  if (p.depth <= kNearPlane || p.depth > kFarPlane) {
    p.culled = true;
    return p;
  }
  p.u = pose.fx * p.cam.x() / p.cam.z() + pose.cx;
  p.v = pose.fy * p.cam.y() / p.cam.z() + pose.cy;
  return p;
}

namespace {
Eigen::Matrix<double, 2, 3> perspective_jacobian(const CameraPose& pose,
                                                 const Eigen::Vector3d& cam) {
  const double x = cam.x(), y = cam.y(), z = cam.z();
  Eigen::Matrix<double, 2, 3> j;
  j << pose.fx / z, 0, -pose.fx * x / (z * z),
      0, pose.fy / z, -pose.fy * y / (z * z);
  return j;
}
}  // namespace

Eigen::Matrix2d project_covariance(const CameraPose& pose, const Eigen::Vector3d& x_world,
                                   const Eigen::Matrix3d& sigma3d, double blur) {
  const Eigen::Vector3d cam = pose.rotation() * x_world + pose.translation();
  const Eigen::Matrix<double, 2, 3> t = perspective_jacobian(pose, cam) * pose.rotation();
  Eigen::Matrix2d s2 = t * sigma3d * t.transpose();
  s2 = 0.5 * (s2 + s2.transpose()).eval();
  s2.diagonal().array() += blur;
  return s2;
}

void projection_backward(const CameraPose& pose, const Eigen::Vector3d& x_world,
                         const Eigen::Matrix3d& sigma3d, const Eigen::Vector2d& g_mean2d,
                         const Eigen::Matrix2d& g_sigma2d, double g_depth,
                         Eigen::Vector3d& g_world, Eigen::Matrix3d& g_sigma3d) {
  const Eigen::Matrix3d w = pose.rotation();
  const Eigen::Vector3d cam = w * x_world + pose.translation();
  const double x = cam.x(), y = cam.y(), z = cam.z();
  const Eigen::Matrix<double, 2, 3> j = perspective_jacobian(pose, cam);
  const Eigen::Matrix<double, 2, 3> t = j * w;

  g_sigma3d = t.transpose() * g_sigma2d * t;

  // Gradient into the camera-frame point: through the mean, the depth, and
  // the Jacobian entries of Sigma2d = (J W) Sigma3d (J W)^T.
  Eigen::Vector3d g_cam = j.transpose() * g_mean2d;
  g_cam.z() += g_depth;

  const Eigen::Matrix<double, 2, 3> g_t = 2.0 * g_sigma2d * t * sigma3d;
  const Eigen::Matrix<double, 2, 3> g_j = g_t * w.transpose();
  const double z2 = z * z, z3 = z2 * z;
  g_cam.x() += g_j(0, 2) * (-pose.fx / z2);
  g_cam.y() += g_j(1, 2) * (-pose.fy / z2);
  g_cam.z() += g_j(0, 0) * (-pose.fx / z2) + g_j(0, 2) * (2 * pose.fx * x / z3) +
               g_j(1, 1) * (-pose.fy / z2) + g_j(1, 2) * (2 * pose.fy * y / z3);

  g_world = w.transpose() * g_cam;
}

}  // namespace hsplat
