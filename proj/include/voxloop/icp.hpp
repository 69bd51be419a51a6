// Point-to-plane ICP: nearest-neighbor correspondences on a uniform grid,
// Gauss-Newton on the 6-dof twist.

#pragma once

#include "voxloop/point_cloud.hpp"

namespace voxloop {

enum class IcpStatus { Ok, TooFewCorrespondences };

struct IcpConfig {
  double max_corr_dist = 0.2;
  int max_iterations = 30;
  double step_tol = 1e-6;
  int min_correspondences = 30;
};

struct IcpResult {
  Pose relative;  // maps source into the target frame
  double rmse = 0.0;
  double inlier_fraction = 0.0;
  IcpStatus status = IcpStatus::Ok;
  int iterations = 0;
};

/// Aligns `source` onto `target` starting from `init`. Target must carry
/// normals. Residual r_j = n_j . (T p_j - q_j). Candidates with fewer than
/// min_correspondences matches are rejected with TooFewCorrespondences.
IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                             const Pose& init, const IcpConfig& cfg = IcpConfig{});

}  // namespace voxloop
