// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <vector>

#include "hsplat/core/types.hpp"

namespace hsplat {

inline constexpr double kNearPlane = 0.05;   // meters
inline constexpr double kFarPlane = 1000.0;  // meters
inline constexpr double kScreenBlur = 0.3;   // px^2, added to Sigma2d diagonal
inline constexpr double kFootprintSigma = 3.0;
inline constexpr double kMinScale = 1e-6;
inline constexpr double kMaxScale = 1e3;

// Rotation matrix of a quaternion (w, x, y, z); normalizes internally.
// Throws std::invalid_argument on a zero-norm quaternion.
Eigen::Matrix3d rotation_from_quaternion(const Eigen::Vector4d& q);

// Sigma = R * diag(exp(log_scale))^2 * R^T. Symmetric PSD by construction.
Eigen::Matrix3d covariance_from_rotation_scale(const Eigen::Vector4d& rotation,
                                               const Eigen::Vector3d& log_scale);

// Pulls dL/dSigma back to the raw quaternion (through normalization) and the
// log-scales. g_sigma must be symmetric.
void covariance_backward(const Eigen::Vector4d& rotation, const Eigen::Vector3d& log_scale,
                         const Eigen::Matrix3d& g_sigma, Eigen::Vector4d& g_rotation,
                         Eigen::Vector3d& g_log_scale);

// Real SH basis values for a unit direction, bands 0..degree (row count
// (degree+1)^2). Layout matches the coefficient layout of Gaussian3D.
void sh_basis(const Eigen::Vector3d& dir, int degree, double* out);
// Basis values plus d(basis)/d(dir) rows.
void sh_basis_with_grad(const Eigen::Vector3d& dir, int degree, double* out,
                        Eigen::Vector3d* grad_out);

// SH contraction followed by the color activation: +0.5 then clamped below at
// zero. Throws on a coefficient-count/degree mismatch.
Eigen::Vector3d eval_sh(const std::vector<Eigen::Vector3d>& sh_coeffs,
                        const Eigen::Vector3d& view_dir, int degree);

struct ProjectedPoint {
  double u = 0, v = 0;
  double depth = 0;     // camera-frame z
  bool culled = false;  // depth <= near plane or beyond far plane
  Eigen::Vector3d cam;  // camera-frame position
};

ProjectedPoint project_point(const CameraPose& pose, const Eigen::Vector3d& x_world);

// EWA projection: Sigma2d = J W Sigma3d W^T J^T + blur * I, with J the
// perspective Jacobian at the (non-culled) camera-frame point.
Eigen::Matrix2d project_covariance(const CameraPose& pose, const Eigen::Vector3d& x_world,
                                   const Eigen::Matrix3d& sigma3d,
                                   double blur = kScreenBlur);

// Backward of the projection pair. Inputs: gradients w.r.t. the 2D mean, the
// 2D covariance (symmetric), and the center depth; outputs gradients w.r.t.
// the world position and the 3D covariance.
void projection_backward(const CameraPose& pose, const Eigen::Vector3d& x_world,
                         const Eigen::Matrix3d& sigma3d, const Eigen::Vector2d& g_mean2d,
                         const Eigen::Matrix2d& g_sigma2d, double g_depth,
                         Eigen::Vector3d& g_world, Eigen::Matrix3d& g_sigma3d);

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

// Band-0 basis value; a flat color c maps to coefficients (c - 0.5) / kSh0.
inline constexpr double kSh0 = 0.28209479177387814;

}  // namespace hsplat
