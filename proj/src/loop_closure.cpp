#include "voxloop/loop_closure.hpp"

#include <algorithm>

namespace voxloop {

ValidationResult validate_candidate(const PointCloud& query_cam, const PointCloud& place_cam,
                                    const Pose& relative, double theta_geo, double theta_sem,
                                    double radius) {
  ValidationResult r;
  if (query_cam.empty() || place_cam.empty()) return r;

  const PointCloud aligned = transform_cloud(relative, query_cam);
  r.geo_overlap = cloud_overlap(aligned, place_cam, radius);

  if (aligned.has_labels() && place_cam.has_labels()) {
    const GridIndex index(place_cam.points, radius);
    size_t matched = 0, agree = 0;
    for (size_t i = 0; i < aligned.points.size(); ++i) {
      const int j = index.nearest_within(aligned.points[i], radius);
      if (j < 0) continue;
      ++matched;
      if (aligned.labels[i] == place_cam.labels[static_cast<size_t>(j)]) ++agree;
    }
    r.sem_agreement = matched > 0 ? static_cast<double>(agree) / matched : 0.0;
  }
  r.accepted = r.geo_overlap >= theta_geo && r.sem_agreement >= theta_sem;
  return r;
}

CloseLoopReport close_loop(const LoopCandidate& cand, const KeyframeSet& set,
                           std::map<int, Frame>& keyframes, std::vector<Pose>& estimates,
                           SceneField& field, MapOptimizer& optimizer,
                           const CloseLoopConfig& cfg, std::mt19937_64& rng) {
  CloseLoopReport report;

  // Graph nodes are world-to-camera so Eq.-style edges T_from * T_to^-1 equal
  // the relative camera transforms ICP measures.
  std::vector<int> node_ids = set.covisible;
  if (std::find(node_ids.begin(), node_ids.end(), cand.query_id) == node_ids.end()) {
    node_ids.push_back(cand.query_id);
  }
  std::sort(node_ids.begin(), node_ids.end());
  if (node_ids.size() < 2) return report;

  PoseGraph graph;
  for (int id : node_ids) graph.nodes[id] = inverse(estimates[static_cast<size_t>(id)]);
  graph.anchor_id = node_ids.front();

  for (size_t i = 0; i + 1 < node_ids.size(); ++i) {
    GraphEdge edge;
    edge.from_id = node_ids[i];
    edge.to_id = node_ids[i + 1];
    edge.measured = compose(graph.nodes.at(edge.from_id), inverse(graph.nodes.at(edge.to_id)));
    edge.kind = EdgeKind::Odometry;
    edge.weight = cfg.odom_edge_weight;
    graph.edges.push_back(edge);
  }
  {
    // ICP: query-camera points expressed in the place camera frame, i.e.
    // N_place * N_query^-1 for world-to-camera nodes.
    GraphEdge edge;
    edge.from_id = cand.place_id;
    edge.to_id = cand.query_id;
    edge.measured = cand.relative;
    edge.kind = EdgeKind::Loop;
    edge.weight = cfg.loop_edge_weight;
    graph.edges.push_back(edge);
  }

  const std::vector<Pose> old_estimates = estimates;
  report.graph = optimize_graph(graph, cfg.graph);
  if (report.graph.aborted) return report;

  // (3) corrected covisible poses; every other frame rigidly follows its
  // nearest preceding covisible frame.
  for (int id : node_ids) {
    const Pose corrected = inverse(graph.nodes.at(id));
    report.max_pose_delta_pgo = std::max(
        report.max_pose_delta_pgo,
        translation_distance(corrected, estimates[static_cast<size_t>(id)]));
    estimates[static_cast<size_t>(id)] = corrected;
  }
  for (size_t i = 0; i < estimates.size(); ++i) {
    if (std::binary_search(node_ids.begin(), node_ids.end(), static_cast<int>(i))) continue;
    auto it = std::upper_bound(node_ids.begin(), node_ids.end(), static_cast<int>(i));
    if (it == node_ids.begin()) continue;
    const int anchor = *std::prev(it);
    const Pose rel = compose(inverse(old_estimates[static_cast<size_t>(anchor)]),
                             old_estimates[i]);
    estimates[i] = compose(estimates[static_cast<size_t>(anchor)], rel);
  }
  for (auto& [id, frame] : keyframes) frame.pose = estimates[static_cast<size_t>(id)];
  report.applied = true;

  // (4) bundle adjustment: joint map + keyframe-pose refinement.
  std::vector<const Frame*> frame_ptrs;
  for (const auto& [id, frame] : keyframes) frame_ptrs.push_back(&frame);
  const int anchor_id = graph.anchor_id;
  for (int it = 0; it < cfg.ba_iters; ++it) {
    std::vector<RayBatch> parts;
    const int per_frame =
        std::max(16, cfg.ba_batch_rays / std::max(1, static_cast<int>(frame_ptrs.size())));
    for (const Frame* f : frame_ptrs) {
      parts.push_back(build_ray_batch(*f, f->pose, per_frame, cfg.ba_sampling,
                                      field.config().truncation, rng, &field.grid()));
    }
    RayBatch batch = merge_batches(parts);
    if (batch.empty()) break;
    std::vector<bool> pose_free(batch.poses.size(), true);
    for (size_t i = 0; i < batch.frame_ids.size(); ++i) {
      if (batch.frame_ids[i] == anchor_id) pose_free[i] = false;
    }
    optimizer.step_with_poses(field, batch, cfg.weights, cfg.ba_pose_lr, pose_free);
    for (size_t i = 0; i < batch.frame_ids.size(); ++i) {
      if (!pose_free[i]) continue;
      const int id = batch.frame_ids[i];
      estimates[static_cast<size_t>(id)] = batch.poses[i];
      keyframes.at(id).pose = batch.poses[i];
    }
    ++report.ba_iters_run;
  }

  report.final_graph = std::move(graph);
  return report;
}

}  // namespace voxloop
