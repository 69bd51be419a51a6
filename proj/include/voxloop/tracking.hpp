// Frame-to-model tracking: Gauss-Newton on SDF residuals of back-projected
// depth pixels queried in the scene field.

#pragma once

#include "voxloop/frame.hpp"
#include "voxloop/scene_field.hpp"

namespace voxloop {

enum class TrackStatus { Ok, NoValidPixels, Diverged };

struct TrackingConfig {
  int max_pixels = 1200;
  int pixel_stride = 2;
  int max_iterations = 20;
  double damping = 1e-4;
  double step_tol = 1e-7;
  int min_valid_pixels = 50;
  double divergence_factor = 3.0;
};

struct TrackResult {
  Pose pose;
  TrackStatus status = TrackStatus::Ok;
  double rmse = 0.0;
  int valid_pixels = 0;
  int iterations = 0;
};

/// Minimizes sum of squared SDF values at transformed depth points over the
/// 6-dof twist. Returns `init` unchanged when fewer than min_valid_pixels
/// depth pixels exist, or flags divergence when the residual grows
/// divergence_factor-fold.
TrackResult track(const Frame& frame, const SceneField& field, const Pose& init,
                  const TrackingConfig& cfg = TrackingConfig{});

}  // namespace voxloop
