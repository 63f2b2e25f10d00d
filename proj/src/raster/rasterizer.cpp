// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/raster/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "hsplat/parallel.hpp"

namespace hsplat {

void GaussianSnapshot::finalize() {
  const size_t n = positions.size();
  const size_t coeffs = static_cast<size_t>(sh_coeff_count(sh_degree));
  if (rotations.size() != n || log_scales.size() != n || opacity_logits.size() != n ||
      payload.size() != n || sh.size() != n * coeffs) {
    throw std::invalid_argument("GaussianSnapshot: array length mismatch");
  }
  // Zero-norm rotations must be rejected here; the covariance kernel would
  // throw from inside the parallel region and terminate.
  for (size_t i = 0; i < n; ++i) {
    if (rotations[i].norm() < 1e-12) {
      throw std::invalid_argument("GaussianSnapshot: zero-norm rotation");
    }
  }
  cov3d.resize(n);
  opacities.resize(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    cov3d[i] = covariance_from_rotation_scale(rotations[i], log_scales[i]);
    opacities[i] = sigmoid(opacity_logits[i]);
  });
}

void GaussianSnapshot::validate() const {
  const size_t n = positions.size();
  if (cov3d.size() != n || opacities.size() != n) {
    throw std::invalid_argument("GaussianSnapshot: finalize() not run");
  }
}

GaussianSnapshot make_snapshot(std::span<const Gaussian3D> gaussians, int sh_degree) {
  const int coeffs = sh_coeff_count(sh_degree);
  GaussianSnapshot snap;
  snap.sh_degree = sh_degree;
  snap.positions.reserve(gaussians.size());
  for (const Gaussian3D& g : gaussians) {
    if (static_cast<int>(g.sh_coeffs.size()) < coeffs) {
      throw std::invalid_argument("make_snapshot: Gaussian has too few SH coefficients");
    }
    snap.positions.push_back(g.position);
    snap.rotations.push_back(g.rotation);
    snap.log_scales.push_back(g.log_scale);
    snap.opacity_logits.push_back(g.opacity_logit);
    for (int k = 0; k < coeffs; ++k) snap.sh.push_back(g.sh_coeffs[k]);
    snap.payload.push_back(g.dynamic_score);
  }
  snap.finalize();
  return snap;
}

namespace {

struct PrepGaussian {
  bool active = false;
  bool degenerate = false;
  double u = 0, v = 0, z = 0;
  Eigen::Matrix2d conic = Eigen::Matrix2d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double opacity = 0;
  double radius = 0;
};

Eigen::Vector3d shade(const GaussianSnapshot& snap, int i, const Eigen::Vector3d& dir,
                      int degree_used) {
  const int coeffs_stored = sh_coeff_count(snap.sh_degree);
  const Eigen::Vector3d* block = &snap.sh[static_cast<size_t>(i) * coeffs_stored];
  double basis[16];
  sh_basis(dir, degree_used, basis);
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  for (int k = 0; k < sh_coeff_count(degree_used); ++k) rgb += basis[k] * block[k];
  rgb.array() += 0.5;
  return rgb.cwiseMax(0.0);
}

int resolve_sh_degree(const GaussianSnapshot& snap, const RenderOptions& options) {
  const int degree = options.sh_degree < 0 ? snap.sh_degree : options.sh_degree;
  if (degree > snap.sh_degree) {
    throw std::invalid_argument("render: requested SH degree exceeds snapshot degree");
  }
  return degree;
}

// Projects every Gaussian; fills screen-space quantities. `skipped` counts
// degenerate 2D covariances.
std::vector<PrepGaussian> preprocess(const GaussianSnapshot& snap, const CameraPose& pose,
                                     int degree_used, int* skipped) {
  snap.validate();
  const Eigen::Vector3d cam_center = pose.center();
  std::vector<PrepGaussian> prep(static_cast<size_t>(snap.count()));
  parallel_for(snap.count(), [&](std::int64_t i) {
    PrepGaussian& p = prep[static_cast<size_t>(i)];
    const ProjectedPoint pp = project_point(pose, snap.positions[i]);
    if (pp.culled) return;
    const Eigen::Matrix2d sigma2d = project_covariance(pose, snap.positions[i], snap.cov3d[i]);
    const double det = sigma2d.determinant();
    if (!(det > kDegenerateDet) || !std::isfinite(det)) {
      p.degenerate = true;
      return;
    }
    p.conic << sigma2d(1, 1) / det, -sigma2d(0, 1) / det, -sigma2d(0, 1) / det,
        sigma2d(0, 0) / det;
    const double mid = 0.5 * (sigma2d(0, 0) + sigma2d(1, 1));
    const double lambda_max =
        mid + std::sqrt(std::max(0.0, mid * mid - det));
    p.radius = kFootprintSigma * std::sqrt(lambda_max);
    p.u = pp.u;
    p.v = pp.v;
    p.z = pp.depth;
    p.opacity = snap.opacities[i];
    if (p.opacity < kMinAlphaContrib) return;  // cannot pass the per-pixel cutoff anywhere
    Eigen::Vector3d view = snap.positions[i] - cam_center;
    const double vn = view.norm();
    p.color = shade(snap, static_cast<int>(i), vn > 0 ? Eigen::Vector3d(view / vn) : Eigen::Vector3d(0, 0, 1),
                    degree_used);
    p.active = true;
  });
  int nskip = 0;
  for (const PrepGaussian& p : prep) nskip += p.degenerate ? 1 : 0;
  *skipped = nskip;
  return prep;
}

struct TileGrid {
  int tiles_x = 0, tiles_y = 0;
  // Per tile, (center depth, global index), sorted ascending with index
  // tie-break — the compositing order contract.
  std::vector<std::vector<std::pair<double, int>>> lists;
};

TileGrid bin_to_tiles(const std::vector<PrepGaussian>& prep, int width, int height) {
  TileGrid grid;
  grid.tiles_x = (width + kTileSize - 1) / kTileSize;
  grid.tiles_y = (height + kTileSize - 1) / kTileSize;
  grid.lists.resize(static_cast<size_t>(grid.tiles_x) * grid.tiles_y);
  for (int i = 0; i < static_cast<int>(prep.size()); ++i) {
    const PrepGaussian& p = prep[static_cast<size_t>(i)];
    if (!p.active) continue;
    int tx0 = static_cast<int>(std::floor((p.u - p.radius) / kTileSize));
    int tx1 = static_cast<int>(std::floor((p.u + p.radius) / kTileSize)) + 1;
    int ty0 = static_cast<int>(std::floor((p.v - p.radius) / kTileSize));
    int ty1 = static_cast<int>(std::floor((p.v + p.radius) / kTileSize)) + 1;
    tx0 = std::max(tx0, 0);
    ty0 = std::max(ty0, 0);
    tx1 = std::min(tx1, grid.tiles_x);
    ty1 = std::min(ty1, grid.tiles_y);
    for (int ty = ty0; ty < ty1; ++ty) {
      for (int tx = tx0; tx < tx1; ++tx) {
        grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx].emplace_back(p.z, i);
      }
    }
  }
  parallel_for(static_cast<std::int64_t>(grid.lists.size()), [&](std::int64_t t) {
    std::sort(grid.lists[static_cast<size_t>(t)].begin(), grid.lists[static_cast<size_t>(t)].end());
  });
  return grid;
}

RenderOutput alloc_output(const CameraPose& pose, const RenderOptions& options) {
  RenderOutput out;
  out.color = ImageD(pose.height, pose.width, 3);
  out.alpha = ImageD(pose.height, pose.width, 1);
  out.depth = ImageD(pose.height, pose.width, 1);
  if (options.payload) out.scalar = ImageD(pose.height, pose.width, 1);
  out.contrib_count = Image<int>(pose.height, pose.width, 1);
  return out;
}

// Front-to-back compositing of one pixel over a depth-sorted candidate list.
template <bool EarlyTerminate>
void composite_pixel(int px, int py, std::span<const std::pair<double, int>> list,
                     const std::vector<PrepGaussian>& prep, const GaussianSnapshot& snap,
                     const RenderOptions& options, RenderOutput& out) {
  double T = 1.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double alpha = 0, depth = 0, scalar = 0;
  int count = 0;
  for (const auto& [z, idx] : list) {
    const PrepGaussian& p = prep[static_cast<size_t>(idx)];
    const double dx = px - p.u, dy = py - p.v;
    const double mah = p.conic(0, 0) * dx * dx + 2 * p.conic(0, 1) * dx * dy +
                       p.conic(1, 1) * dy * dy;
    if (mah > kFootprintSigma * kFootprintSigma) continue;
    const double g = std::exp(-0.5 * mah);
    const double a = std::min(kMaxAlphaContrib, p.opacity * g);
    if (a < kMinAlphaContrib) continue;
    const double w = a * T;
    color += w * p.color;
    alpha += w;
    depth += w * p.z;
    if (options.payload) scalar += w * snap.payload[static_cast<size_t>(idx)];
    ++count;
    T *= 1.0 - a;
    if (EarlyTerminate && T < kMinTransmittance) break;
  }
  color += T * options.background;
  out.color.at(py, px, 0) = color[0];
  out.color.at(py, px, 1) = color[1];
  out.color.at(py, px, 2) = color[2];
  out.alpha.at(py, px) = alpha;
  out.depth.at(py, px) = depth;
  if (options.payload) out.scalar.at(py, px) = scalar;
  out.contrib_count.at(py, px) = count;
}

}  // namespace

RenderOutput render(const GaussianSnapshot& snapshot, const CameraPose& pose,
                    const RenderOptions& options) {
  pose.validate();
  const int degree_used = resolve_sh_degree(snapshot, options);
  RenderOutput out = alloc_output(pose, options);
  const std::vector<PrepGaussian> prep =
      preprocess(snapshot, pose, degree_used, &out.skipped_gaussians);
  const TileGrid grid = bin_to_tiles(prep, pose.width, pose.height);

  parallel_for(static_cast<std::int64_t>(grid.lists.size()), [&](std::int64_t t) {
    const int tx = static_cast<int>(t) % grid.tiles_x;
    const int ty = static_cast<int>(t) / grid.tiles_x;
    const auto& list = grid.lists[static_cast<size_t>(t)];
    const int x1 = std::min((tx + 1) * kTileSize, pose.width);
    const int y1 = std::min((ty + 1) * kTileSize, pose.height);
    for (int py = ty * kTileSize; py < y1; ++py) {
      for (int px = tx * kTileSize; px < x1; ++px) {
        composite_pixel<true>(px, py, list, prep, snapshot, options, out);
      }
    }
  });
  return out;
}

RenderOutput brute_force_render(const GaussianSnapshot& snapshot, const CameraPose& pose,
                                const RenderOptions& options) {
  pose.validate();
  const int degree_used = resolve_sh_degree(snapshot, options);
  RenderOutput out = alloc_output(pose, options);
  std::vector<PrepGaussian> prep;
  prep = preprocess(snapshot, pose, degree_used, &out.skipped_gaussians);
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < static_cast<int>(prep.size()); ++i) {
    if (prep[static_cast<size_t>(i)].active) order.emplace_back(prep[static_cast<size_t>(i)].z, i);
  }
  std::sort(order.begin(), order.end());
  for (int py = 0; py < pose.height; ++py) {
    for (int px = 0; px < pose.width; ++px) {
      composite_pixel<false>(px, py, order, prep, snapshot, options, out);
    }
  }
  return out;
}

namespace {

// Per-contribution record for the backward replay of one pixel.
struct Contrib {
  int slot;
  double a;       // alpha contribution after clamping
  double g;       // Gaussian weight exp(-mah/2)
  double T;       // transmittance in front of this contribution
  double ad0, ad1;  // conic * d
  bool clamped;   // opacity * g hit the 0.99 ceiling
};

constexpr int kSlotStride = 11;
// Slot layout: [g_u, g_v, g_S00, g_S01, g_S11, g_r, g_g, g_b, g_opacity, g_z, g_payload]

inline const double* grad_or_null(const ImageD& img, const CameraPose& pose, int channels,
                                  const char* what) {
  if (img.data.empty()) return nullptr;
  if (img.height != pose.height || img.width != pose.width || img.channels != channels) {
    throw std::invalid_argument(std::string("render_backward: upstream ") + what +
                                " shape mismatch");
  }
  return img.data.data();
}

}  // namespace

RenderGrads render_backward(const GaussianSnapshot& snapshot, const CameraPose& pose,
                            const RenderOptions& options, const UpstreamGrad& upstream) {
  pose.validate();
  const int degree_used = resolve_sh_degree(snapshot, options);
  const int n = snapshot.count();
  const int coeffs_stored = sh_coeff_count(snapshot.sh_degree);

  const double* gcol = grad_or_null(upstream.color, pose, 3, "color");
  const double* galpha = grad_or_null(upstream.alpha, pose, 1, "alpha");
  const double* gdepth = grad_or_null(upstream.depth, pose, 1, "depth");
  const double* gscalar = grad_or_null(upstream.scalar, pose, 1, "scalar");
  if (gscalar && !options.payload) {
    throw std::invalid_argument("render_backward: scalar gradient given but payload disabled");
  }

  RenderGrads grads;
  grads.positions.assign(static_cast<size_t>(n), Eigen::Vector3d::Zero());
  grads.rotations.assign(static_cast<size_t>(n), Eigen::Vector4d::Zero());
  grads.log_scales.assign(static_cast<size_t>(n), Eigen::Vector3d::Zero());
  grads.opacity_logits.assign(static_cast<size_t>(n), 0.0);
  grads.sh.assign(static_cast<size_t>(n) * coeffs_stored, Eigen::Vector3d::Zero());
  grads.payload.assign(static_cast<size_t>(n), 0.0);
  if (n == 0) return grads;

  int skipped = 0;
  const std::vector<PrepGaussian> prep = preprocess(snapshot, pose, degree_used, &skipped);
  const TileGrid grid = bin_to_tiles(prep, pose.width, pose.height);

  // Stage 1: per-tile accumulation of screen-space gradients into per-slot
  // buffers. Tiles are independent; each buffer is written by one worker.
  std::vector<std::vector<double>> tile_grads(grid.lists.size());
  parallel_for(static_cast<std::int64_t>(grid.lists.size()), [&](std::int64_t t) {
    const auto& list = grid.lists[static_cast<size_t>(t)];
    if (list.empty()) return;
    std::vector<double>& buf = tile_grads[static_cast<size_t>(t)];
    buf.assign(list.size() * kSlotStride, 0.0);
    const int tx = static_cast<int>(t) % grid.tiles_x;
    const int ty = static_cast<int>(t) / grid.tiles_x;
    const int x1 = std::min((tx + 1) * kTileSize, pose.width);
    const int y1 = std::min((ty + 1) * kTileSize, pose.height);
    std::vector<Contrib> contribs;
    contribs.reserve(list.size());
    for (int py = ty * kTileSize; py < y1; ++py) {
      for (int px = tx * kTileSize; px < x1; ++px) {
        // Forward replay.
        contribs.clear();
        double T = 1.0;
        for (int s = 0; s < static_cast<int>(list.size()); ++s) {
          const PrepGaussian& p = prep[static_cast<size_t>(list[static_cast<size_t>(s)].second)];
          const double dx = px - p.u, dy = py - p.v;
          const double mah = p.conic(0, 0) * dx * dx + 2 * p.conic(0, 1) * dx * dy +
                             p.conic(1, 1) * dy * dy;
          if (mah > kFootprintSigma * kFootprintSigma) continue;
          const double g = std::exp(-0.5 * mah);
          const double raw = p.opacity * g;
          const double a = std::min(kMaxAlphaContrib, raw);
          if (a < kMinAlphaContrib) continue;
          Contrib c;
          c.slot = s;
          c.a = a;
          c.g = g;
          c.T = T;
          c.ad0 = p.conic(0, 0) * dx + p.conic(0, 1) * dy;
          c.ad1 = p.conic(0, 1) * dx + p.conic(1, 1) * dy;
          c.clamped = raw >= kMaxAlphaContrib;
          contribs.push_back(c);
          T *= 1.0 - a;
          if (T < kMinTransmittance) break;
        }

        const size_t pix = static_cast<size_t>(py) * pose.width + px;
        const Eigen::Vector3d gc = gcol ? Eigen::Vector3d(gcol[pix * 3], gcol[pix * 3 + 1],
                                                          gcol[pix * 3 + 2])
                                        : Eigen::Vector3d::Zero();
        const double ga = galpha ? galpha[pix] : 0.0;
        const double gd = gdepth ? gdepth[pix] : 0.0;
        const double gs = gscalar ? gscalar[pix] : 0.0;

        // Suffix accumulators hold everything composited behind the current
        // contribution, background included.
        Eigen::Vector3d suffix_color = T * options.background;
        double suffix_alpha = 0, suffix_depth = 0, suffix_scalar = 0;
        for (int k = static_cast<int>(contribs.size()) - 1; k >= 0; --k) {
          const Contrib& c = contribs[static_cast<size_t>(k)];
          const int idx = list[static_cast<size_t>(c.slot)].second;
          const PrepGaussian& p = prep[static_cast<size_t>(idx)];
          const double payload_val = options.payload ? snapshot.payload[static_cast<size_t>(idx)] : 0.0;
          const double w = c.a * c.T;
          const double inv_one_m = 1.0 / (1.0 - c.a);

          double dL_da = gc.dot(c.T * p.color - suffix_color * inv_one_m) +
                         ga * (c.T - suffix_alpha * inv_one_m) +
                         gd * (c.T * p.z - suffix_depth * inv_one_m);
          if (gscalar) dL_da += gs * (c.T * payload_val - suffix_scalar * inv_one_m);

          double* slot = buf.data() + static_cast<size_t>(c.slot) * kSlotStride;
          slot[5] += w * gc[0];
          slot[6] += w * gc[1];
          slot[7] += w * gc[2];
          slot[9] += w * gd;
          if (gscalar) slot[10] += w * gs;
          if (!c.clamped) {
            slot[8] += dL_da * c.g;  // d a / d opacity = g
            const double gw = dL_da * p.opacity;  // d a / d g = opacity
            // dG/dmu = G * conic * d ; dG/dSigma = G/2 * (conic d)(conic d)^T
            slot[0] += gw * c.g * c.ad0;
            slot[1] += gw * c.g * c.ad1;
            slot[2] += gw * 0.5 * c.g * c.ad0 * c.ad0;
            slot[3] += gw * 0.5 * c.g * c.ad0 * c.ad1;
            slot[4] += gw * 0.5 * c.g * c.ad1 * c.ad1;
          }

          suffix_color += w * p.color;
          suffix_alpha += w;
          suffix_depth += w * p.z;
          suffix_scalar += w * payload_val;
        }
      }
    }
  });

  // Stage 2: merge per-tile buffers in fixed tile order.
  std::vector<double> acc(static_cast<size_t>(n) * kSlotStride, 0.0);
  for (size_t t = 0; t < grid.lists.size(); ++t) {
    const auto& list = grid.lists[t];
    const auto& buf = tile_grads[t];
    if (buf.empty()) continue;
    for (size_t s = 0; s < list.size(); ++s) {
      double* dst = acc.data() + static_cast<size_t>(list[s].second) * kSlotStride;
      const double* src = buf.data() + s * kSlotStride;
      for (int k = 0; k < kSlotStride; ++k) dst[k] += src[k];
    }
  }

  // Stage 3: chain screen-space gradients to the stored parameters.
  const Eigen::Vector3d cam_center = pose.center();
  parallel_for(n, [&](std::int64_t i) {
    const PrepGaussian& p = prep[static_cast<size_t>(i)];
    if (!p.active) return;
    const double* a = acc.data() + static_cast<size_t>(i) * kSlotStride;
    const Eigen::Vector2d g_mu(a[0], a[1]);
    Eigen::Matrix2d g_sigma2d;
    g_sigma2d << a[2], a[3], a[3], a[4];
    const Eigen::Vector3d g_color(a[5], a[6], a[7]);
    const double g_opacity_post = a[8];
    const double g_z = a[9];
    grads.payload[static_cast<size_t>(i)] = a[10];

    // Color -> SH coefficients and, through the view direction, position.
    Eigen::Vector3d view = snapshot.positions[i] - cam_center;
    const double vn = view.norm();
    const Eigen::Vector3d dir = vn > 0 ? Eigen::Vector3d(view / vn) : Eigen::Vector3d(0, 0, 1);
    double basis[16];
    Eigen::Vector3d basis_grad[16];
    sh_basis_with_grad(dir, degree_used, basis, basis_grad);
    const Eigen::Vector3d* block = &snapshot.sh[static_cast<size_t>(i) * coeffs_stored];
    const int used = sh_coeff_count(degree_used);
    Eigen::Vector3d pre = Eigen::Vector3d::Constant(0.5);
    for (int k = 0; k < used; ++k) pre += basis[k] * block[k];
    Eigen::Vector3d g_pre;
    for (int c = 0; c < 3; ++c) g_pre[c] = pre[c] > 0 ? g_color[c] : 0.0;
    Eigen::Vector3d g_dir = Eigen::Vector3d::Zero();
    Eigen::Vector3d* g_block = &grads.sh[static_cast<size_t>(i) * coeffs_stored];
    for (int k = 0; k < used; ++k) {
      g_block[k] = basis[k] * g_pre;
      g_dir += basis_grad[k] * g_pre.dot(block[k]);
    }
    Eigen::Vector3d g_pos = Eigen::Vector3d::Zero();
    if (vn > 0) g_pos += (g_dir - dir * dir.dot(g_dir)) / vn;

    grads.opacity_logits[static_cast<size_t>(i)] = g_opacity_post * p.opacity * (1.0 - p.opacity);

    Eigen::Vector3d g_world;
    Eigen::Matrix3d g_sigma3d;
    projection_backward(pose, snapshot.positions[i], snapshot.cov3d[i], g_mu, g_sigma2d, g_z,
                        g_world, g_sigma3d);
    g_pos += g_world;
    grads.positions[static_cast<size_t>(i)] = g_pos;
    covariance_backward(snapshot.rotations[i], snapshot.log_scales[i], g_sigma3d,
                        grads.rotations[static_cast<size_t>(i)],
                        grads.log_scales[static_cast<size_t>(i)]);
  });

  return grads;
}

}  // namespace hsplat
