#include "voxloop/point_cloud.hpp"

#include <cmath>

namespace voxloop {

PointCloud transform_cloud(const Pose& pose, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(pose * p);
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(pose.rotation * n);
  out.labels = cloud.labels;
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  struct KeyHash {
    size_t operator()(const std::array<int64_t, 3>& k) const {
      return static_cast<size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<int64_t, 3>, int, KeyHash> seen;
  PointCloud out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    const std::array<int64_t, 3> key = {static_cast<int64_t>(std::floor(p.x() / voxel)),
                                        static_cast<int64_t>(std::floor(p.y() / voxel)),
                                        static_cast<int64_t>(std::floor(p.z() / voxel))};
    if (seen.emplace(key, 1).second) {
      out.points.push_back(p);
      if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
      if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
    }
  }
  return out;
}

GridIndex::GridIndex(const std::vector<Eigen::Vector3d>& points, double cell)
    : points_(points), cell_(cell) {
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const auto c = cell_of(points[static_cast<size_t>(i)]);
    if (cells_.empty()) {
      cell_lo_ = cell_hi_ = c;
    } else {
      for (int a = 0; a < 3; ++a) {
        cell_lo_[static_cast<size_t>(a)] = std::min(cell_lo_[static_cast<size_t>(a)], c[static_cast<size_t>(a)]);
        cell_hi_[static_cast<size_t>(a)] = std::max(cell_hi_[static_cast<size_t>(a)], c[static_cast<size_t>(a)]);
      }
    }
    cells_[c].push_back(i);
  }
}

std::array<int64_t, 3> GridIndex::cell_of(const Eigen::Vector3d& p) const {
  return {static_cast<int64_t>(std::floor(p.x() / cell_)),
          static_cast<int64_t>(std::floor(p.y() / cell_)),
          static_cast<int64_t>(std::floor(p.z() / cell_))};
}

int GridIndex::nearest_within(const Eigen::Vector3d& q, double radius) const {
  const auto c = cell_of(q);
  int best = -1;
  double best_sq = radius * radius;
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dz = -1; dz <= 1; ++dz) {
        const auto it = cells_.find({c[0] + dx, c[1] + dy, c[2] + dz});
        if (it == cells_.end()) continue;
        for (int idx : it->second) {
          const double d = (points_[static_cast<size_t>(idx)] - q).squaredNorm();
          if (d <= best_sq) {
            best_sq = d;
            best = idx;
          }
        }
      }
    }
  }
  return best;
}

int GridIndex::nearest(const Eigen::Vector3d& q, double* dist) const {
  if (points_.empty()) return -1;
  const auto c = cell_of(q);
  int64_t ring_cap = 1;
  for (int a = 0; a < 3; ++a) {
    ring_cap = std::max({ring_cap, std::abs(c[static_cast<size_t>(a)] - cell_lo_[static_cast<size_t>(a)]),
                         std::abs(cell_hi_[static_cast<size_t>(a)] - c[static_cast<size_t>(a)])});
  }
  int best = -1;
  double best_sq = std::numeric_limits<double>::max();
  for (int64_t k = 0; k <= ring_cap + 1; ++k) {
    // a point in Chebyshev ring k lies at least (k-1)*cell away
    if (best >= 0) {
      const double lower = static_cast<double>(k - 1) * cell_;
      if (lower > 0.0 && lower * lower > best_sq) break;
    }
    for (int64_t dx = -k; dx <= k; ++dx) {
      for (int64_t dy = -k; dy <= k; ++dy) {
        for (int64_t dz = -k; dz <= k; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != k) continue;
          const auto it = cells_.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == cells_.end()) continue;
          for (int idx : it->second) {
            const double d = (points_[static_cast<size_t>(idx)] - q).squaredNorm();
            if (d < best_sq) {
              best_sq = d;
              best = idx;
            }
          }
        }
      }
    }
  }
  if (dist && best >= 0) *dist = std::sqrt(best_sq);
  return best;
}

double cloud_overlap_directed(const PointCloud& a, const PointCloud& b, double radius) {
  if (a.empty() || b.empty()) return 0.0;
  const GridIndex index(b.points, radius);
  size_t hits = 0;
  for (const auto& p : a.points) {
    if (index.has_neighbor(p, radius)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(a.size());
}

double cloud_overlap(const PointCloud& a, const PointCloud& b, double radius) {
  return std::min(cloud_overlap_directed(a, b, radius), cloud_overlap_directed(b, a, radius));
}

}  // namespace voxloop
