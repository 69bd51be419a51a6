#include <doctest.h>

#include <random>

#include "voxloop/point_cloud.hpp"

using namespace voxloop;

namespace {

PointCloud grid_cloud(int nx, int ny, double spacing, const Eigen::Vector3d& origin) {
  PointCloud c;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      c.points.push_back(origin + Eigen::Vector3d(i * spacing, j * spacing, 0));
      c.normals.push_back(Eigen::Vector3d::UnitZ());
      c.labels.push_back((i + j) % 3);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("transform_cloud by identity is a no-op") {
  const PointCloud c = grid_cloud(5, 5, 0.1, {0, 0, 0});
  const PointCloud t = transform_cloud(Pose::identity(), c);
  for (size_t i = 0; i < c.size(); ++i) {
    CHECK((t.points[i] - c.points[i]).norm() < 1e-15);
    CHECK((t.normals[i] - c.normals[i]).norm() < 1e-15);
  }
}

TEST_CASE("transform_cloud rotates but does not translate normals") {
  PointCloud c;
  c.points.push_back(Eigen::Vector3d(1, 0, 0));
  c.normals.push_back(Eigen::Vector3d::UnitX());
  Twist tw;
  tw.omega = Eigen::Vector3d(0, 0, M_PI / 2);
  Pose p = exp_map(tw);
  p.translation = Eigen::Vector3d(5, 5, 5);
  const PointCloud t = transform_cloud(p, c);
  CHECK((t.points[0] - Eigen::Vector3d(5, 6, 5)).norm() < 1e-12);
  CHECK((t.normals[0] - Eigen::Vector3d(0, 1, 0)).norm() < 1e-12);
  CHECK(std::abs(t.normals[0].norm() - 1.0) < 1e-12);
}

TEST_CASE("overlap of identical clouds is 1") {
  const PointCloud c = grid_cloud(20, 20, 0.05, {0, 0, 0});
  CHECK(cloud_overlap(c, c, 0.05) == doctest::Approx(1.0));
}

TEST_CASE("overlap of well-separated clouds is 0") {
  const PointCloud a = grid_cloud(10, 10, 0.05, {0, 0, 0});
  const PointCloud b = grid_cloud(10, 10, 0.05, {10, 0, 0});
  CHECK(cloud_overlap(a, b, 0.1) == doctest::Approx(0.0));
}

TEST_CASE("overlap against an empty cloud is 0") {
  const PointCloud a = grid_cloud(4, 4, 0.1, {0, 0, 0});
  CHECK(cloud_overlap(a, PointCloud{}, 0.1) == doctest::Approx(0.0));
}

TEST_CASE("half cloud overlaps at 0.5, against brute force") {
  PointCloud a = grid_cloud(40, 40, 0.05, {0, 0, 0});
  PointCloud b;
  for (size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].x() < 40 * 0.05 / 2 - 1e-9) b.points.push_back(a.points[i]);
  }
  const double radius = 0.04;
  const double fast = cloud_overlap_directed(a, b, radius);
  CHECK(fast == doctest::Approx(0.5).epsilon(0.05));

  // brute-force all-pairs oracle
  size_t hits = 0;
  for (const auto& p : a.points) {
    bool found = false;
    for (const auto& q : b.points) {
      if ((p - q).norm() <= radius) {
        found = true;
        break;
      }
    }
    if (found) ++hits;
  }
  const double brute = static_cast<double>(hits) / a.size();
  CHECK(fast == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("property: overlap invariant under a common rigid transform") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const PointCloud a = grid_cloud(15, 15, 0.07, {0, 0, 0});
  const PointCloud b = grid_cloud(15, 15, 0.07, {0.3, 0.1, 0});
  const double base = cloud_overlap(a, b, 0.1);
  for (int i = 0; i < 5; ++i) {
    Twist tw;
    tw.omega = Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
    tw.v = Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
    const Pose g = exp_map(tw);
    const double moved = cloud_overlap(transform_cloud(g, a), transform_cloud(g, b), 0.1);
    CHECK(moved == doctest::Approx(base).epsilon(0.02));
  }
}

TEST_CASE("voxel_downsample keeps one point per cell") {
  PointCloud c;
  for (int i = 0; i < 100; ++i) {
    c.points.push_back(Eigen::Vector3d(0.001 * i, 0, 0));
    c.labels.push_back(i % 2);
  }
  const PointCloud d = voxel_downsample(c, 0.05);
  CHECK(d.size() == 2);  // 0.1 m of points, 0.05 m cells
  CHECK(d.has_labels());
}
