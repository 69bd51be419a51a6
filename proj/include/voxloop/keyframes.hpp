// Hierarchical keyframe management: keyframes every 5 frames, place frames
// and covisible frames admitted by point-cloud overlap against cached
// downsampled clouds.

#pragma once

#include <functional>
#include <map>

#include "voxloop/frame.hpp"

namespace voxloop {

struct KeyframeSet {
  std::vector<int> keyframes;  // strictly increasing frame ids
  std::vector<int> covisible;
  std::vector<int> place;
  // camera-frame downsampled clouds, cached at admission time
  std::map<int, PointCloud> covisible_clouds;
  std::map<int, PointCloud> place_clouds;
};

/// Keyframe policy: every 5th frame, first frame included.
inline bool maybe_keyframe(int frame_id) { return frame_id % 5 == 0; }

struct HierarchyConfig {
  double tau_place = 0.3;
  double tau_covis = 0.45;
  double overlap_radius = 0.1;
  double downsample_voxel = 0.05;
  int cloud_stride = 2;
};

/// Assigns covisible/place roles to a tracked keyframe by symmetric cloud
/// overlap in the world frame (current pose estimates via `pose_of`), updates
/// role lists and cloud caches. Enforces place => covisible.
void update_hierarchy(Frame& frame, KeyframeSet& set, const std::function<Pose(int)>& pose_of,
                      const HierarchyConfig& cfg = HierarchyConfig{});

}  // namespace voxloop
