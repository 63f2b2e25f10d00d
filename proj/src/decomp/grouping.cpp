// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hsplat/core/point_grid.hpp"
#include "hsplat/decomp/decomposition.hpp"

namespace hsplat {
namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return 0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  return values[mid];
}

}  // namespace

GroupingResult cluster_group(std::span<const Gaussian3D> gaussians,
                             std::span<const std::uint8_t> labels,
                             const ClusterParams& params) {
  const size_t n = gaussians.size();
  if (n == 0) throw std::invalid_argument("cluster_group: empty Gaussian set");
  if (labels.size() != n) throw std::invalid_argument("cluster_group: label count mismatch");
  if (params.min_pts < 1 || params.scene_scale <= 0) {
    throw std::invalid_argument("cluster_group: bad params");
  }

  const int fdim = static_cast<int>(gaussians[0].feature.size());
  std::vector<Eigen::Vector3d> pos(n);
  std::vector<Eigen::VectorXd> feat(n);
  for (size_t i = 0; i < n; ++i) {
    if (gaussians[i].feature.size() != fdim) {
      throw std::invalid_argument("cluster_group: inconsistent feature dimensions");
    }
    pos[i] = gaussians[i].position / params.scene_scale;
    feat[i] = params.feature_weight * gaussians[i].feature;
  }

  GroupingResult out;
  out.eps_used = params.eps;
  if (out.eps_used <= 0) {
    // Auto eps from the spacing of the normalized positions.
    std::vector<double> nn(n);
    const double cell0 = std::max(1e-9, 1.0 / std::cbrt(static_cast<double>(n)));
    PointGrid probe(pos, cell0);
    for (size_t i = 0; i < n; ++i) nn[i] = probe.nearest_distance(i);
    out.eps_used = 3.0 * median_of(nn);
  }
  const double eps = out.eps_used;

  // Joint distance = sqrt(|dpos|^2 + |dfeat|^2) >= positional distance, so a
  // positional eps-ball query over-approximates the joint neighborhood.
  PointGrid grid(pos, eps > 0 ? eps : 1.0);
  auto joint_neighbors = [&](size_t i, std::vector<int>& scratch, std::vector<int>& out_idx) {
    grid.neighbors_within(i, eps, scratch);
    out_idx.clear();
    const double eps2 = eps * eps;
    for (int j : scratch) {
      const double d2 = (pos[static_cast<size_t>(j)] - pos[i]).squaredNorm() +
                        (feat[static_cast<size_t>(j)] - feat[i]).squaredNorm();
      if (d2 <= eps2) out_idx.push_back(j);
    }
  };

  // Classic density clustering: core points (neighborhood >= min_pts, self
  // included) grow clusters; border points join, everything else is noise.
  // Points are claimed when enqueued, so each enters the queue at most once.
  std::vector<int>& ids = out.cluster_ids;
  ids.assign(n, -2);  // -2 = unvisited
  std::vector<int> scratch, neigh, queue;
  int next_id = 0;
  auto claim = [&](int cid, const std::vector<int>& found) {
    for (int nb : found) {
      if (ids[static_cast<size_t>(nb)] == -2 || ids[static_cast<size_t>(nb)] == -1) {
        ids[static_cast<size_t>(nb)] = cid;
        queue.push_back(nb);
      }
    }
  };
  for (size_t i = 0; i < n; ++i) {
    if (ids[i] != -2) continue;
    joint_neighbors(i, scratch, neigh);
    if (static_cast<int>(neigh.size()) < params.min_pts) {
      ids[i] = -1;
      continue;
    }
    const int cid = next_id++;
    ids[i] = cid;
    queue.clear();
    claim(cid, neigh);
    for (size_t k = 0; k < queue.size(); ++k) {
      const size_t j = static_cast<size_t>(queue[k]);
      joint_neighbors(j, scratch, neigh);
      if (static_cast<int>(neigh.size()) >= params.min_pts) claim(cid, neigh);
    }
  }
  out.cluster_count = next_id;

  // Per-cluster vote: strictly more than vote_threshold dynamic flips the
  // whole cluster dynamic, otherwise static. Noise keeps its input label.
  std::vector<int> members(static_cast<size_t>(next_id), 0);
  std::vector<int> dynamic_members(static_cast<size_t>(next_id), 0);
  for (size_t i = 0; i < n; ++i) {
    if (ids[i] < 0) continue;
    ++members[static_cast<size_t>(ids[i])];
    if (labels[i]) ++dynamic_members[static_cast<size_t>(ids[i])];
  }
  out.labels.assign(labels.begin(), labels.end());
  for (size_t i = 0; i < n; ++i) {
    if (ids[i] < 0) continue;
    const double frac = static_cast<double>(dynamic_members[static_cast<size_t>(ids[i])]) /
                        members[static_cast<size_t>(ids[i])];
    const std::uint8_t voted = frac > params.vote_threshold ? 1 : 0;
    if (voted != out.labels[i]) ++out.flipped;
    out.labels[i] = voted;
  }
  return out;
}

}  // namespace hsplat
