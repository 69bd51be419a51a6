// Point clouds with optional unit normals and semantic labels, a uniform-grid
// nearest-neighbor index, voxel downsampling, and point-cloud overlap.

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "voxloop/se3.hpp"

namespace voxloop {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;  // empty or same length as points
  std::vector<int> labels;               // empty or same length as points

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_labels() const { return !labels.empty(); }
};

/// Rotates points and normals, translates points only.
PointCloud transform_cloud(const Pose& pose, const PointCloud& cloud);

/// Keeps one representative point per `voxel`-sized cell (the first point
/// inserted into the cell, with its normal/label). Deterministic in input order.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

/// Uniform-grid spatial index over a fixed point set. Cell size equals the
/// query radius, so a lookup scans at most 27 cells.
class GridIndex {
 public:
  GridIndex(const std::vector<Eigen::Vector3d>& points, double cell);

  /// Index of the nearest point within `radius` of q, or -1.
  int nearest_within(const Eigen::Vector3d& q, double radius) const;
  bool has_neighbor(const Eigen::Vector3d& q, double radius) const {
    return nearest_within(q, radius) >= 0;
  }

  /// Unbounded nearest neighbor via expanding cell rings; -1 only when the
  /// index is empty. Distance returned through `dist` when non-null.
  int nearest(const Eigen::Vector3d& q, double* dist = nullptr) const;

 private:
  struct KeyHash {
    size_t operator()(const std::array<int64_t, 3>& k) const {
      return static_cast<size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::array<int64_t, 3> cell_of(const Eigen::Vector3d& p) const;

  const std::vector<Eigen::Vector3d>& points_;
  double cell_;
  std::unordered_map<std::array<int64_t, 3>, std::vector<int>, KeyHash> cells_;
  std::array<int64_t, 3> cell_lo_{0, 0, 0}, cell_hi_{0, 0, 0};
};

/// Fraction of points of `a` that have a neighbor in `b` within `radius`.
/// Either cloud empty gives 0.
double cloud_overlap_directed(const PointCloud& a, const PointCloud& b, double radius);

/// min(a->b, b->a); the symmetric variant used everywhere in the pipeline.
double cloud_overlap(const PointCloud& a, const PointCloud& b, double radius);

}  // namespace voxloop
