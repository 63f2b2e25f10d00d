// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace hsplat {

// Uniform hash grid over 3D points for neighbor queries at desk scale. The
// point vector must outlive the grid.
class PointGrid {
 public:
  PointGrid(const std::vector<Eigen::Vector3d>& points, double cell)
      : points_(points), cell_(cell > 0 ? cell : 1.0) {
    for (size_t i = 0; i < points.size(); ++i) {
      cells_[key_of(points[i])].push_back(static_cast<int>(i));
    }
  }

  // Mean distance to the k nearest neighbors of point i (excluding i),
  // searched over expanding Chebyshev shells until no closer point can exist.
  double mean_knn_distance(size_t i, int k) const {
    std::vector<double> best;  // squared distances, max-heap
    collect_knn(i, k, best);
    double sum = 0;
    for (double d2 : best) sum += std::sqrt(d2);
    return best.empty() ? 0.0 : sum / static_cast<double>(best.size());
  }

  // Distance to the single nearest neighbor of point i.
  double nearest_distance(size_t i) const {
    std::vector<double> best;
    collect_knn(i, 1, best);
    return best.empty() ? 0.0 : std::sqrt(best.front());
  }

  // Indices of points (including i itself) within `radius` of point i.
  void neighbors_within(size_t i, double radius, std::vector<int>& out) const {
    out.clear();
    const Eigen::Vector3d& p = points_[i];
    const double r2 = radius * radius;
    const CellKey c = key_of(p);
    const std::int64_t span = static_cast<std::int64_t>(std::floor(radius / cell_)) + 1;
    for (std::int64_t dz = -span; dz <= span; ++dz) {
      for (std::int64_t dy = -span; dy <= span; ++dy) {
        for (std::int64_t dx = -span; dx <= span; ++dx) {
          const auto it = cells_.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (int j : it->second) {
            if ((points_[static_cast<size_t>(j)] - p).squaredNorm() <= r2) out.push_back(j);
          }
        }
      }
    }
  }

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
  };
  struct CellHash {
    size_t operator()(const CellKey& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (std::int64_t v : {k.x, k.y, k.z}) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<size_t>(h);
    }
  };

  CellKey key_of(const Eigen::Vector3d& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  void collect_knn(size_t i, int k, std::vector<double>& best) const {
    best.clear();
    best.reserve(static_cast<size_t>(k) + 1);
    const Eigen::Vector3d& p = points_[i];
    const CellKey c = key_of(p);
    for (std::int64_t r = 0;; ++r) {
      scan_shell(c, r, p, i, k, best);
      if (static_cast<int>(best.size()) >= k) {
        // Points in shells beyond r are at least r * cell away.
        const double safe = static_cast<double>(r) * cell_;
        if (best.front() <= safe * safe) break;
      }
      if (r > 1 && static_cast<size_t>(r) > points_.size()) break;  // degenerate guard
    }
  }

  void scan_shell(const CellKey& c, std::int64_t r, const Eigen::Vector3d& p, size_t self,
                  int k, std::vector<double>& best) const {
    for (std::int64_t dz = -r; dz <= r; ++dz) {
      for (std::int64_t dy = -r; dy <= r; ++dy) {
        for (std::int64_t dx = -r; dx <= r; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          const auto it = cells_.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (int j : it->second) {
            if (static_cast<size_t>(j) == self) continue;
            const double d2 = (points_[static_cast<size_t>(j)] - p).squaredNorm();
            if (static_cast<int>(best.size()) < k) {
              best.push_back(d2);
              std::push_heap(best.begin(), best.end());
            } else if (d2 < best.front()) {
              std::pop_heap(best.begin(), best.end());
              best.back() = d2;
              std::push_heap(best.begin(), best.end());
            }
          }
        }
      }
    }
  }

  const std::vector<Eigen::Vector3d>& points_;
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

}  // namespace hsplat
