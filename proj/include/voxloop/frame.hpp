// One RGB-D-semantic observation: images, intrinsics, estimated pose, and the
// keyframe / covisible / place role flags.

#pragma once

#include <cstdint>
#include <vector>

#include "voxloop/point_cloud.hpp"
#include "voxloop/se3.hpp"

namespace voxloop {

struct Intrinsics {
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

struct FrameRoles {
  bool keyframe = false;
  bool covisible = false;
  bool place = false;
};

struct Frame {
  int id = 0;
  Intrinsics intr;
  std::vector<uint8_t> color;      // H*W*3, row-major
  std::vector<double> depth;       // H*W meters, 0 = invalid
  std::vector<uint8_t> semantics;  // H*W class ids
  Pose pose;                       // camera-to-world, estimated
  FrameRoles roles;

  size_t pixel_index(int u, int v) const {
    return static_cast<size_t>(v) * static_cast<size_t>(intr.width) + static_cast<size_t>(u);
  }
  double depth_at(int u, int v) const { return depth[pixel_index(u, v)]; }
  bool valid_depth(int u, int v) const { return depth_at(u, v) > 0.0; }
  int label_at(int u, int v) const { return semantics[pixel_index(u, v)]; }
  Eigen::Vector3d color_at(int u, int v) const {
    const size_t i = 3 * pixel_index(u, v);
    return Eigen::Vector3d(color[i], color[i + 1], color[i + 2]) / 255.0;
  }

  /// Camera-frame ray direction with unit z, pixel-center convention.
  Eigen::Vector3d ray_dir(int u, int v) const {
    return Eigen::Vector3d((u + 0.5 - intr.cx) / intr.fx, (v + 0.5 - intr.cy) / intr.fy, 1.0);
  }
  /// Camera-frame 3D point of a pixel at its measured depth.
  Eigen::Vector3d back_project(int u, int v) const { return ray_dir(u, v) * depth_at(u, v); }
};

/// Back-projects every `stride`-th valid pixel into a camera-frame cloud with
/// central-difference normals (oriented toward the camera) and class labels.
PointCloud back_project_cloud(const Frame& frame, int stride);

}  // namespace voxloop
