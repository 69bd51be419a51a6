#include <doctest.h>

#include <cstdio>
#include <random>

#include "voxloop/trajectory.hpp"

using namespace voxloop;

namespace {

Pose yaw_pose(double angle, const Eigen::Vector3d& t) {
  Twist tw;
  tw.omega = Eigen::Vector3d(0, 0, angle);
  Pose p = exp_map(tw);
  p.translation = t;
  return p;
}

}  // namespace

TEST_CASE("ate_rmse of identical trajectories is zero") {
  std::vector<Pose> traj;
  for (int i = 0; i < 20; ++i) traj.push_back(yaw_pose(0.1 * i, Eigen::Vector3d(i, 2 * i, 0)));
  CHECK(ate_rmse(traj, traj) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ate_rmse removes a global offset") {
  std::vector<Pose> gt, est;
  for (int i = 0; i < 20; ++i) {
    const Pose p = yaw_pose(0.05 * i, Eigen::Vector3d(0.3 * i, std::sin(i * 0.2), 0));
    gt.push_back(p);
    Pose shifted = p;
    shifted.translation += Eigen::Vector3d(0.1, 0, 0);
    est.push_back(shifted);
  }
  CHECK(ate_rmse(est, gt) < 1e-9);
}

TEST_CASE("ate_rmse matches a hand-computed two-pose case") {
  // Two poses on the x axis; estimate stretches the gap symmetrically so the
  // optimal alignment leaves +/-0.1 m per pose: RMSE = 0.1.
  std::vector<Pose> gt = {yaw_pose(0, {0, 0, 0}), yaw_pose(0, {1, 0, 0})};
  std::vector<Pose> est = {yaw_pose(0, {0, 0, 0}), yaw_pose(0, {1.2, 0, 0})};
  CHECK(ate_rmse(est, gt) == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("ate_rmse rejects mismatched lengths") {
  std::vector<Pose> a(3), b(4);
  CHECK_THROWS_AS(ate_rmse(a, b), LengthMismatchError);
}

TEST_CASE("property: ate_rmse invariant under rigid transform of the estimate") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Pose> gt, est;
  for (int i = 0; i < 30; ++i) {
    gt.push_back(yaw_pose(0.1 * i, Eigen::Vector3d(i * 0.2, dist(rng), dist(rng))));
    Pose noisy = gt.back();
    noisy.translation += 0.05 * Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
    est.push_back(noisy);
  }
  const double base = ate_rmse(est, gt);
  for (int trial = 0; trial < 10; ++trial) {
    Twist tw;
    tw.omega = Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
    tw.v = Eigen::Vector3d(dist(rng), dist(rng), dist(rng)) * 3.0;
    const Pose g = exp_map(tw);
    std::vector<Pose> moved;
    for (const auto& p : est) moved.push_back(compose(g, p));
    CHECK(ate_rmse(moved, gt) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("TUM trajectory round trip with comments") {
  Trajectory traj;
  for (int i = 0; i < 5; ++i) {
    TimedPose tp;
    tp.timestamp = i * 0.1;
    tp.pose = yaw_pose(0.2 * i, Eigen::Vector3d(0.1 * i, -0.2 * i, 0.05));
    traj.push_back(tp);
  }
  const std::string path = "/tmp/voxloop_test_traj.txt";
  write_tum_trajectory(path, traj);
  const Trajectory back = read_tum_trajectory(path);
  REQUIRE(back.size() == traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    CHECK(back[i].timestamp == doctest::Approx(traj[i].timestamp));
    CHECK(translation_distance(back[i].pose, traj[i].pose) < 1e-8);
    CHECK(rotation_distance(back[i].pose, traj[i].pose) < 1e-7);
  }
  std::remove(path.c_str());
}
