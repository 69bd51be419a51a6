#include "voxloop/tracking.hpp"

#include <Eigen/Dense>

namespace voxloop {

namespace {

double sdf_rmse(const SceneField& field, const Pose& pose,
                const std::vector<Eigen::Vector3d>& points, double band) {
  double sq = 0.0;
  int used = 0;
  for (const auto& p : points) {
    const double s = field.sdf_at(pose * p);
    if (std::abs(s) > band) continue;
    sq += s * s;
    ++used;
  }
  return used > 0 ? std::sqrt(sq / used) : std::numeric_limits<double>::infinity();
}

}  // namespace

TrackResult track(const Frame& frame, const SceneField& field, const Pose& init,
                  const TrackingConfig& cfg) {
  TrackResult result;
  result.pose = init;

  std::vector<Eigen::Vector3d> points;
  for (int v = 0; v < frame.intr.height; v += cfg.pixel_stride) {
    for (int u = 0; u < frame.intr.width; u += cfg.pixel_stride) {
      if (frame.valid_depth(u, v)) points.push_back(frame.back_project(u, v));
    }
  }
  result.valid_pixels = static_cast<int>(points.size());
  if (result.valid_pixels < cfg.min_valid_pixels) {
    result.status = TrackStatus::NoValidPixels;
    return result;
  }
  if (static_cast<int>(points.size()) > cfg.max_pixels) {
    const size_t step = points.size() / static_cast<size_t>(cfg.max_pixels) + 1;
    std::vector<Eigen::Vector3d> sub;
    for (size_t i = 0; i < points.size(); i += step) sub.push_back(points[i]);
    points.swap(sub);
  }

  const double band = field.config().truncation;
  Pose pose = init;
  const double initial_rmse = sdf_rmse(field, pose, points, band);
  double best_rmse = initial_rmse;
  Pose best_pose = pose;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    int used = 0;
    for (const auto& p : points) {
      const Eigen::Vector3d x = pose * p;
      const double s = field.sdf_at(x);
      if (std::abs(s) > band) continue;
      const Eigen::Vector3d g = field.sdf_gradient(x);
      Eigen::Matrix<double, 6, 1> jrow;
      jrow.head<3>() = x.cross(g);
      jrow.tail<3>() = g;
      h += jrow * jrow.transpose();
      b -= jrow * s;
      ++used;
    }
    if (used < cfg.min_valid_pixels / 2) break;

    h.diagonal().array() += cfg.damping;
    const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(b);
    if (!delta.allFinite()) break;
    pose = compose(exp_map(Twist::from_vector(delta)), pose);
    ++result.iterations;

    const double rmse = sdf_rmse(field, pose, points, band);
    if (rmse < best_rmse) {
      best_rmse = rmse;
      best_pose = pose;
    }
    if (rmse > cfg.divergence_factor * initial_rmse && initial_rmse > 0.0) {
      result.pose = init;
      result.rmse = initial_rmse;
      result.status = TrackStatus::Diverged;
      return result;
    }
    if (delta.norm() < cfg.step_tol) break;
  }

  result.pose = best_pose;
  result.rmse = best_rmse;
  return result;
}

}  // namespace voxloop
