#include "voxloop/icp.hpp"

#include <Eigen/Dense>

namespace voxloop {

IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                             const Pose& init, const IcpConfig& cfg) {
  if (!target.has_normals()) {
    throw std::invalid_argument("icp_point_to_plane: target cloud has no normals");
  }
  IcpResult result;
  result.relative = init;

  const GridIndex index(target.points, cfg.max_corr_dist);
  Pose pose = init;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    double sq_sum = 0.0;
    int matched = 0;

    for (const auto& p : source.points) {
      const Eigen::Vector3d x = pose * p;
      const int j = index.nearest_within(x, cfg.max_corr_dist);
      if (j < 0) continue;
      const Eigen::Vector3d& q = target.points[static_cast<size_t>(j)];
      const Eigen::Vector3d& n = target.normals[static_cast<size_t>(j)];
      const double r = n.dot(x - q);

      Eigen::Matrix<double, 6, 1> jrow;
      jrow.head<3>() = x.cross(n);
      jrow.tail<3>() = n;
      h += jrow * jrow.transpose();
      b -= jrow * r;
      sq_sum += r * r;
      ++matched;
    }

    result.rmse = matched > 0 ? std::sqrt(sq_sum / matched) : 0.0;
    result.inlier_fraction = static_cast<double>(matched) / static_cast<double>(source.size());
    if (matched < cfg.min_correspondences) {
      result.status = IcpStatus::TooFewCorrespondences;
      result.relative = init;
      return result;
    }

    h.diagonal().array() += 1e-9;  // guards the point-to-plane null space
    const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(b);
    if (!delta.allFinite()) break;
    pose = compose(exp_map(Twist::from_vector(delta)), pose);
    ++result.iterations;
    if (delta.norm() < cfg.step_tol) break;
  }

  // final diagnostics at the converged pose
  double sq_sum = 0.0;
  int matched = 0;
  for (const auto& p : source.points) {
    const Eigen::Vector3d x = pose * p;
    const int j = index.nearest_within(x, cfg.max_corr_dist);
    if (j < 0) continue;
    const double r = target.normals[static_cast<size_t>(j)].dot(x - target.points[static_cast<size_t>(j)]);
    sq_sum += r * r;
    ++matched;
  }
  result.relative = pose;
  result.rmse = matched > 0 ? std::sqrt(sq_sum / matched) : 0.0;
  result.inlier_fraction = static_cast<double>(matched) / static_cast<double>(source.size());
  if (matched < cfg.min_correspondences) {
    result.status = IcpStatus::TooFewCorrespondences;
    result.relative = init;
  }
  return result;
}

}  // namespace voxloop
