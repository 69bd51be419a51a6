#include "voxloop/frame.hpp"

namespace voxloop {

PointCloud back_project_cloud(const Frame& frame, int stride) {
  PointCloud cloud;
  const int w = frame.intr.width, h = frame.intr.height;
  for (int v = 1; v < h - 1; v += stride) {
    for (int u = 1; u < w - 1; u += stride) {
      if (!frame.valid_depth(u, v)) continue;
      const Eigen::Vector3d p = frame.back_project(u, v);

      if (!frame.valid_depth(u - 1, v) || !frame.valid_depth(u + 1, v) ||
          !frame.valid_depth(u, v - 1) || !frame.valid_depth(u, v + 1)) {
        continue;  // no stable normal at depth boundaries
      }
      const Eigen::Vector3d du = frame.back_project(u + 1, v) - frame.back_project(u - 1, v);
      const Eigen::Vector3d dv = frame.back_project(u, v + 1) - frame.back_project(u, v - 1);
      Eigen::Vector3d n = du.cross(dv);
      const double len = n.norm();
      if (len < 1e-12) continue;
      n /= len;
      if (n.dot(p) > 0.0) n = -n;  // face the camera

      cloud.points.push_back(p);
      cloud.normals.push_back(n);
      cloud.labels.push_back(frame.label_at(u, v));
    }
  }
  return cloud;
}

}  // namespace voxloop
