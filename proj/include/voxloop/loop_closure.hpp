// Loop candidates: geometric + semantic validation of ICP-registered pairs,
// pose-graph construction over covisible frames, correction propagation, and
// post-loop bundle adjustment.

#pragma once

#include <map>

#include "voxloop/icp.hpp"
#include "voxloop/keyframes.hpp"
#include "voxloop/pose_graph.hpp"
#include "voxloop/scene_field.hpp"

namespace voxloop {

struct LoopCandidate {
  int query_id = -1;
  int place_id = -1;
  double similarity = 0.0;
  Pose relative;  // query camera -> place camera, from ICP
  double geo_overlap = 0.0;
  double sem_agreement = 0.0;
};

struct ValidationResult {
  double geo_overlap = 0.0;
  double sem_agreement = 0.0;
  bool accepted = false;
};

/// geo_overlap: symmetric cloud overlap after applying `relative` to the
/// query cloud. sem_agreement: fraction of matched point pairs with equal
/// labels. Accepts iff both meet their thresholds.
ValidationResult validate_candidate(const PointCloud& query_cam, const PointCloud& place_cam,
                                    const Pose& relative, double theta_geo, double theta_sem,
                                    double radius);

struct CloseLoopConfig {
  double odom_edge_weight = 1.0;
  double loop_edge_weight = 2.0;
  int ba_iters = 10;
  double ba_pose_lr = 1e-4;
  int ba_batch_rays = 1024;
  RaySamplingConfig ba_sampling;
  LossWeights weights;
  GraphOptConfig graph;
};

struct CloseLoopReport {
  GraphOptReport graph;
  double max_pose_delta_pgo = 0.0;  // largest covisible translation change
  int ba_iters_run = 0;
  bool applied = false;
  PoseGraph final_graph;  // post-optimization, for g2o dumps
};

/// Stop-the-world loop closure: (1) pose graph over covisible frames plus the
/// loop keyframe (world-to-camera nodes, odometry edges from current
/// estimates, the ICP loop edge), (2) LM optimization, (3) rigid re-anchoring
/// of every other frame to its nearest preceding covisible frame, (4) exactly
/// ba_iters bundle-adjustment steps jointly refining keyframe poses, latent
/// codes and decoder weights. On optimizer abort nothing is modified.
CloseLoopReport close_loop(const LoopCandidate& cand, const KeyframeSet& set,
                           std::map<int, Frame>& keyframes, std::vector<Pose>& estimates,
                           SceneField& field, MapOptimizer& optimizer,
                           const CloseLoopConfig& cfg, std::mt19937_64& rng);

}  // namespace voxloop
