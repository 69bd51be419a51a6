// Pixel sampling for descriptor construction: semantic-guided stratified
// sampling with per-class quotas proportional to region area, and the uniform
// random baseline.

#pragma once

#include "voxloop/frame.hpp"
#include "voxloop/scene_field.hpp"

namespace voxloop {

struct SampleSet {
  std::vector<Eigen::Vector2i> pixels;
  std::vector<Eigen::Vector3d> points;  // back-projected, world frame
  Eigen::MatrixXd codes;                // latent_dim x M
  std::vector<int> labels;

  size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
};

/// Per-class quotas: n_c = max(1, round(M * count_c / total)), then adjusted
/// to sum exactly to M (trim largest quotas first, then top up the largest
/// regions). class_counts pairs are (class_id, valid-pixel count).
std::vector<int> stratified_quotas(const std::vector<std::pair<int, int>>& class_counts, int M);

/// Quota-per-class sampling, uniform (seeded) within each class among
/// valid-depth pixels. Codes are the latent vectors at the back-projected
/// points under frame.pose. Empty frame (no valid depth) gives an empty set.
SampleSet stratified_sample(const Frame& frame, const SceneField& field, int M, uint64_t seed);

/// Uniform sampling over all valid-depth pixels; the ablation baseline.
SampleSet random_sample(const Frame& frame, const SceneField& field, int M, uint64_t seed);

}  // namespace voxloop
