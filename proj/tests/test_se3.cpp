#include <doctest.h>

#include <random>

#include "voxloop/se3.hpp"

using namespace voxloop;

namespace {

Twist random_twist(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::Vector3d axis(dist(rng), dist(rng), dist(rng));
  if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitX();
  axis.normalize();
  std::uniform_real_distribution<double> ang(0.0, max_angle);
  Twist t;
  t.omega = ang(rng) * axis;
  t.v = Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
  return t;
}

Pose random_pose(std::mt19937_64& rng, double max_angle = 3.0) {
  return exp_map(random_twist(rng, max_angle));
}

double pose_error(const Pose& a, const Pose& b) {
  return rotation_distance(a, b) + translation_distance(a, b);
}

}  // namespace

TEST_CASE("exp_map of zero twist is identity") {
  const Pose p = exp_map(Twist{});
  CHECK(pose_error(p, Pose::identity()) < 1e-12);
}

TEST_CASE("exp_map of quarter-turn yaw") {
  Twist t;
  t.omega = Eigen::Vector3d(0, 0, M_PI / 2);
  const Pose p = exp_map(t);
  CHECK(p.translation.norm() == doctest::Approx(0.0));
  const Eigen::Vector3d rotated = p * Eigen::Vector3d(1, 0, 0);
  CHECK((rotated - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("log_map of identity is zero") {
  const Twist t = log_map(Pose::identity());
  CHECK(t.vector().norm() < 1e-15);
}

TEST_CASE("exp/log round trip at |omega| = 0.3") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    Twist t = random_twist(rng, 0.3);
    t.omega = t.omega.normalized() * 0.3;
    const Twist back = log_map(exp_map(t));
    CHECK((back.vector() - t.vector()).norm() < 1e-9);
  }
}

TEST_CASE("log of a 179.9 degree rotation stays finite") {
  Twist t;
  t.omega = Eigen::Vector3d::UnitY() * (179.9 * M_PI / 180.0);
  const Twist back = log_map(exp_map(t));
  CHECK(back.omega.norm() == doctest::Approx(3.1399).epsilon(1e-3));
  CHECK((back.vector() - t.vector()).norm() < 1e-9);
}

TEST_CASE("log_map throws near pi") {
  Twist t;
  t.omega = Eigen::Vector3d::UnitX() * (M_PI - 1e-9);
  CHECK_THROWS_AS(log_map(exp_map(t)), AngleNearPiError);
}

TEST_CASE("compose with identity and inverse") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng);
    CHECK(pose_error(compose(p, Pose::identity()), p) < 1e-12);
    CHECK(pose_error(compose(p, inverse(p)), Pose::identity()) < 1e-9);
    CHECK(pose_error(compose(inverse(p), p), Pose::identity()) < 1e-9);
  }
}

TEST_CASE("property: exp/log mutual inverses up to |omega| <= 3.0") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Twist t = random_twist(rng, 3.0);
    CHECK((log_map(exp_map(t)).vector() - t.vector()).norm() < 1e-9);
  }
}

TEST_CASE("property: composition is associative") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    CHECK(pose_error(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-9);
  }
}

TEST_CASE("quaternion stays normalized through long products") {
  std::mt19937_64 rng(19);
  Pose p = Pose::identity();
  for (int i = 0; i < 10000; ++i) p = compose(p, random_pose(rng, 0.5));
  CHECK(std::abs(p.rotation.norm() - 1.0) < 1e-9);
}
