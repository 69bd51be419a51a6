// Synthetic ground-truth worlds: analytic-SDF primitives with semantic
// classes, sphere-traced RGB-D-semantic rendering, waypoint trajectories with
// drift-injected odometry, and dataset emission in the shared directory
// layout.

#pragma once

#include <string>
#include <vector>

#include "voxloop/config.hpp"
#include "voxloop/dataset.hpp"
#include "voxloop/frame.hpp"

namespace voxloop {

enum class PrimitiveShape { Box, Sphere, Plane };

struct ScenePrimitive {
  PrimitiveShape shape = PrimitiveShape::Box;
  Pose pose;                                          // primitive-to-world
  Eigen::Vector3d size = Eigen::Vector3d(1, 1, 1);    // box half-extents; sphere: size.x()=radius
  int class_id = 0;
  Eigen::Vector3d albedo = Eigen::Vector3d(0.5, 0.5, 0.5);

  double sdf(const Eigen::Vector3d& x_world) const;
};

struct Scene {
  std::vector<ScenePrimitive> primitives;
  Eigen::Vector3d bounds_min = Eigen::Vector3d(-5, -5, -5);
  Eigen::Vector3d bounds_max = Eigen::Vector3d(5, 5, 5);
  int num_classes = 0;

  double sdf(const Eigen::Vector3d& x) const;
  int nearest_primitive(const Eigen::Vector3d& x) const;
  Eigen::Vector3d normal(const Eigen::Vector3d& x) const;
};

struct RenderConfig {
  double max_depth = 10.0;
  double near = 0.05;
  double hit_eps = 1e-5;
  int max_steps = 384;
};

/// Per-pixel sphere tracing against the min-SDF composite. Rays that miss get
/// depth 0 (invalid). Deterministic.
Frame render_frame(const Scene& scene, const Pose& pose, const Intrinsics& intr,
                   const RenderConfig& rc = RenderConfig{});

struct TrajectorySpec {
  std::vector<Pose> waypoints;
  int frames_between = 20;
  double drift_sigma_rot = 0.0;    // rad per step
  double drift_sigma_trans = 0.0;  // m per step
  uint64_t seed = 1;
  bool closed = true;  // revisit the first waypoint at the end
};

/// Ground-truth poses interpolated between waypoints (slerp + lerp).
std::vector<Pose> interpolate_trajectory(const TrajectorySpec& spec);

/// Drifted odometry: per-step gaussian twist noise composed onto the true
/// relative motions. Zero sigmas reproduce the ground truth exactly.
std::vector<Pose> drift_odometry(const std::vector<Pose>& gt, const TrajectorySpec& spec);

/// Camera pose at `position` looking at `target`, CV axes (x right, y down,
/// z forward), world up +z.
Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target);

// --- built-in scenes --------------------------------------------------------

/// 6x5x3 m room, 6 primitives across 5 classes (wall, floor, box, sphere,
/// table); the acceptance-default world.
Scene default_room();

/// Long wall with small wall-mounted markers of a rare class at distinct
/// spots; the loop-detection benchmark world.
Scene marker_wall(int num_markers);

/// Two small rooms separated by a wide gap; frames from different rooms never
/// overlap.
Scene two_rooms();

/// Square loop inside the default room, looking inward. `frames` total poses.
TrajectorySpec square_loop_trajectory(int frames, double sigma_trans, double sigma_rot,
                                      uint64_t seed);

// --- dataset generation -------------------------------------------------------

struct SequenceSpec {
  Scene scene;
  TrajectorySpec trajectory;
  Intrinsics intr{160, 120, 115.0, 115.0, 80.0, 60.0};
  double depth_scale = 5000.0;
};

/// Parses a scene spec file (key = value, see docs/formats.md) into a
/// SequenceSpec. Throws ConfigError on unknown scene names.
SequenceSpec parse_sequence_spec(const Config& cfg);

/// Renders all frames at ground truth and writes the dataset directory,
/// including gt_traj.txt and odom_traj.txt. Rendering parallelizes over
/// frames when threads > 1; output is identical either way.
void generate_sequence(const SequenceSpec& spec, const std::string& out_dir, int threads = 1);

}  // namespace voxloop
