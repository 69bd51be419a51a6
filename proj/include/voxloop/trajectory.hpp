// Trajectory containers, TUM-format text I/O, and absolute trajectory error.

#pragma once

#include <string>
#include <vector>

#include "voxloop/se3.hpp"

namespace voxloop {

struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<TimedPose>;

struct LengthMismatchError : std::runtime_error {
  LengthMismatchError(size_t a, size_t b)
      : std::runtime_error("trajectory length mismatch: " + std::to_string(a) + " vs " +
                           std::to_string(b)) {}
};

/// One line per pose: "timestamp tx ty tz qx qy qz qw", '#' comments.
Trajectory read_tum_trajectory(const std::string& path);
void write_tum_trajectory(const std::string& path, const Trajectory& traj);

/// Rigid (rotation+translation, no scale) alignment of `source` translations
/// onto `target` in the least-squares sense. Closed form via SVD.
Pose umeyama_alignment(const std::vector<Pose>& source, const std::vector<Pose>& target);

/// RMSE of translational residuals after rigid alignment of `estimated` onto
/// `ground_truth`. Lists must be equal-length and time-aligned.
double ate_rmse(const std::vector<Pose>& estimated, const std::vector<Pose>& ground_truth);

std::vector<Pose> poses_of(const Trajectory& traj);

}  // namespace voxloop
