#include "voxloop/keyframes.hpp"

namespace voxloop {

void update_hierarchy(Frame& frame, KeyframeSet& set, const std::function<Pose(int)>& pose_of,
                      const HierarchyConfig& cfg) {
  if (!frame.roles.keyframe) return;
  if (set.keyframes.empty() || set.keyframes.back() < frame.id) {
    set.keyframes.push_back(frame.id);
  }

  const PointCloud cam_cloud =
      voxel_downsample(back_project_cloud(frame, cfg.cloud_stride), cfg.downsample_voxel);
  const PointCloud world_cloud = transform_cloud(pose_of(frame.id), cam_cloud);

  double max_place = 0.0;
  for (const auto& [id, cloud] : set.place_clouds) {
    max_place = std::max(
        max_place, cloud_overlap(world_cloud, transform_cloud(pose_of(id), cloud),
                                 cfg.overlap_radius));
  }
  double max_covis = 0.0;
  for (const auto& [id, cloud] : set.covisible_clouds) {
    max_covis = std::max(
        max_covis, cloud_overlap(world_cloud, transform_cloud(pose_of(id), cloud),
                                 cfg.overlap_radius));
  }

  const bool is_place = max_place < cfg.tau_place;
  const bool is_covis = is_place || max_covis < cfg.tau_covis;  // place => covisible

  if (is_covis && !frame.roles.covisible) {
    frame.roles.covisible = true;
    set.covisible.push_back(frame.id);
    set.covisible_clouds.emplace(frame.id, cam_cloud);
  }
  if (is_place && !frame.roles.place) {
    frame.roles.place = true;
    set.place.push_back(frame.id);
    set.place_clouds.emplace(frame.id, cam_cloud);
  }
}

}  // namespace voxloop
