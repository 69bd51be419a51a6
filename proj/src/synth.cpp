#include "voxloop/synth.hpp"

#include <cmath>
#include <random>
#include <thread>

namespace voxloop {

double ScenePrimitive::sdf(const Eigen::Vector3d& x_world) const {
  const Eigen::Vector3d p = inverse(pose) * x_world;
  switch (shape) {
    case PrimitiveShape::Box: {
      const Eigen::Vector3d q = p.cwiseAbs() - size;
      const Eigen::Vector3d qp = q.cwiseMax(0.0);
      return qp.norm() + std::min(q.maxCoeff(), 0.0);
    }
    case PrimitiveShape::Sphere:
      return p.norm() - size.x();
    case PrimitiveShape::Plane:
      return p.z();  // solid half-space below the local xy plane
  }
  return 0.0;
}

double Scene::sdf(const Eigen::Vector3d& x) const {
  double best = std::numeric_limits<double>::max();
  for (const auto& prim : primitives) best = std::min(best, prim.sdf(x));
  return best;
}

int Scene::nearest_primitive(const Eigen::Vector3d& x) const {
  int best = 0;
  double best_sdf = std::numeric_limits<double>::max();
  for (size_t i = 0; i < primitives.size(); ++i) {
    const double s = primitives[i].sdf(x);
    if (s < best_sdf) {
      best_sdf = s;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Eigen::Vector3d Scene::normal(const Eigen::Vector3d& x) const {
  const double h = 1e-4;
  Eigen::Vector3d n(sdf(x + Eigen::Vector3d(h, 0, 0)) - sdf(x - Eigen::Vector3d(h, 0, 0)),
                    sdf(x + Eigen::Vector3d(0, h, 0)) - sdf(x - Eigen::Vector3d(0, h, 0)),
                    sdf(x + Eigen::Vector3d(0, 0, h)) - sdf(x - Eigen::Vector3d(0, 0, h)));
  const double len = n.norm();
  return len > 1e-12 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ();
}

Frame render_frame(const Scene& scene, const Pose& pose, const Intrinsics& intr,
                   const RenderConfig& rc) {
  Frame frame;
  frame.intr = intr;
  frame.pose = pose;
  const size_t n = static_cast<size_t>(intr.width) * static_cast<size_t>(intr.height);
  frame.color.assign(3 * n, 0);
  frame.depth.assign(n, 0.0);
  frame.semantics.assign(n, 0);

  const Eigen::Vector3d origin = pose.translation;
  const Eigen::Vector3d light = Eigen::Vector3d(0.3, 0.5, 0.8).normalized();

  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Eigen::Vector3d dir_cam = frame.ray_dir(u, v);
      const double dir_len = dir_cam.norm();
      const Eigen::Vector3d dir = (pose.rotation * dir_cam) / dir_len;

      double t = rc.near;
      bool hit = false;
      for (int step = 0; step < rc.max_steps; ++step) {
        const Eigen::Vector3d x = origin + t * dir;
        const double s = scene.sdf(x);
        if (s < rc.hit_eps) {
          hit = true;
          break;
        }
        t += s;
        if (t * dir_cam.z() / dir_len > rc.max_depth) break;
      }
      if (!hit) continue;

      const Eigen::Vector3d x = origin + t * dir;
      const double depth = t / dir_len;  // camera-z depth
      if (depth <= 0.0 || depth > rc.max_depth) continue;

      const size_t i = frame.pixel_index(u, v);
      frame.depth[i] = depth;

      const ScenePrimitive& prim = scene.primitives[static_cast<size_t>(scene.nearest_primitive(x))];
      frame.semantics[i] = static_cast<uint8_t>(prim.class_id);

      // Lambertian shade plus a gentle world-position modulation so color
      // carries spatial signal.
      const Eigen::Vector3d nrm = scene.normal(x);
      const double shade = 0.55 + 0.35 * std::abs(nrm.dot(light));
      const double mod = 0.9 + 0.1 * std::sin(3.0 * x.x()) * std::sin(3.0 * x.y() + 1.0) *
                                   std::sin(3.0 * x.z() + 2.0);
      for (int c = 0; c < 3; ++c) {
        const double val = std::clamp(prim.albedo[c] * shade * mod, 0.0, 1.0);
        frame.color[3 * i + c] = static_cast<uint8_t>(std::lround(val * 255.0));
      }
    }
  }
  return frame;
}

std::vector<Pose> interpolate_trajectory(const TrajectorySpec& spec) {
  std::vector<Pose> waypoints = spec.waypoints;
  if (spec.closed && !waypoints.empty()) waypoints.push_back(waypoints.front());
  std::vector<Pose> out;
  if (waypoints.size() < 2) return waypoints;

  const int segments = static_cast<int>(waypoints.size()) - 1;
  for (int s = 0; s < segments; ++s) {
    const Pose& a = waypoints[static_cast<size_t>(s)];
    const Pose& b = waypoints[static_cast<size_t>(s + 1)];
    for (int i = 0; i < spec.frames_between; ++i) {
      const double t = static_cast<double>(i) / spec.frames_between;
      Pose p;
      p.rotation = a.rotation.slerp(t, b.rotation);
      p.translation = (1.0 - t) * a.translation + t * b.translation;
      out.push_back(p);
    }
  }
  // a closed loop ends one step before the exact start pose
  if (!spec.closed) out.push_back(waypoints.back());
  return out;
}

std::vector<Pose> drift_odometry(const std::vector<Pose>& gt, const TrajectorySpec& spec) {
  if (spec.drift_sigma_rot == 0.0 && spec.drift_sigma_trans == 0.0) return gt;
  std::vector<Pose> odom;
  odom.reserve(gt.size());
  if (gt.empty()) return odom;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  odom.push_back(gt.front());
  for (size_t i = 1; i < gt.size(); ++i) {
    const Pose delta = between(gt[i - 1], gt[i]);
    Twist noise;
    noise.omega = spec.drift_sigma_rot * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    noise.v = spec.drift_sigma_trans * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    odom.push_back(compose(odom.back(), compose(delta, exp_map(noise))));
  }
  return odom;
}

Pose look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - position).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right).normalized();
  Eigen::Matrix3d rot;
  rot.col(0) = right;
  rot.col(1) = down;
  rot.col(2) = forward;
  return Pose(Eigen::Quaterniond(rot), position);
}

Scene default_room() {
  Scene scene;
  scene.bounds_min = Eigen::Vector3d(-3.2, -2.7, -0.2);
  scene.bounds_max = Eigen::Vector3d(3.2, 2.7, 3.2);
  scene.num_classes = 5;

  auto plane = [](const Eigen::Vector3d& point, const Eigen::Vector3d& inward) {
    // local +z is the inward normal; solid behind the plane
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ().cross(inward);
    const double angle = std::acos(std::clamp(Eigen::Vector3d::UnitZ().dot(inward), -1.0, 1.0));
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    if (axis.norm() > 1e-9) {
      q = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
    } else if (angle > 1.0) {
      q = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX()));
    }
    return Pose(q, point);
  };

  // floor z=0
  scene.primitives.push_back({PrimitiveShape::Plane, plane({0, 0, 0}, {0, 0, 1}),
                              {1, 1, 1}, 1, {0.55, 0.45, 0.35}});
  // two walls: x = -3 and y = -2.5
  scene.primitives.push_back({PrimitiveShape::Plane, plane({-3, 0, 0}, {1, 0, 0}),
                              {1, 1, 1}, 0, {0.7, 0.7, 0.65}});
  scene.primitives.push_back({PrimitiveShape::Plane, plane({0, -2.5, 0}, {0, 1, 0}),
                              {1, 1, 1}, 0, {0.65, 0.68, 0.7}});
  // crate
  scene.primitives.push_back({PrimitiveShape::Box, Pose(Eigen::Quaterniond::Identity(),
                              {0.9, 0.6, 0.35}), {0.35, 0.3, 0.35}, 2, {0.75, 0.3, 0.2}});
  // sphere
  scene.primitives.push_back({PrimitiveShape::Sphere, Pose(Eigen::Quaterniond::Identity(),
                              {-0.8, -0.7, 0.3}), {0.3, 0.3, 0.3}, 3, {0.2, 0.35, 0.75}});
  // table top
  scene.primitives.push_back({PrimitiveShape::Box, Pose(Eigen::Quaterniond::Identity(),
                              {-0.2, 1.1, 0.72}), {0.5, 0.35, 0.04}, 4, {0.3, 0.65, 0.3}});
  return scene;
}

Scene marker_wall(int num_markers) {
  Scene scene;
  scene.bounds_min = Eigen::Vector3d(-1.0, -8.5, -0.2);
  scene.bounds_max = Eigen::Vector3d(4.0, 8.5, 3.2);
  scene.num_classes = 3;

  // wall plane x = 3 facing -x, floor z = 0
  Eigen::Quaterniond wall_rot(Eigen::AngleAxisd(-M_PI / 2, Eigen::Vector3d::UnitY()));
  scene.primitives.push_back({PrimitiveShape::Plane, Pose(wall_rot, {3.0, 0, 0}),
                              {1, 1, 1}, 0, {0.7, 0.7, 0.68}});
  scene.primitives.push_back({PrimitiveShape::Plane, Pose(Eigen::Quaterniond::Identity(),
                              {0, 0, 0}), {1, 1, 1}, 1, {0.5, 0.45, 0.4}});

  // small boxes on the wall at distinct heights/offsets; class 2 is rare
  for (int i = 0; i < num_markers; ++i) {
    const double y = -6.0 + 12.0 * i / std::max(1, num_markers - 1);
    const double z = 1.0 + 0.5 * ((i * 2654435761u) % 5) / 4.0;
    scene.primitives.push_back({PrimitiveShape::Box, Pose(Eigen::Quaterniond::Identity(),
                                {2.88, y, z}), {0.12, 0.1, 0.1}, 2, {0.8, 0.65, 0.15}});
  }
  return scene;
}

Scene two_rooms() {
  Scene scene;
  scene.bounds_min = Eigen::Vector3d(-12, -3, -0.2);
  scene.bounds_max = Eigen::Vector3d(12, 3, 3.2);
  scene.num_classes = 3;
  for (int room = 0; room < 2; ++room) {
    const double cx = room == 0 ? -8.0 : 8.0;
    scene.primitives.push_back({PrimitiveShape::Box, Pose(Eigen::Quaterniond::Identity(),
                                {cx, 0, 1.0}), {0.5, 0.5, 1.0}, 1, {0.6, 0.4, 0.3}});
    scene.primitives.push_back({PrimitiveShape::Sphere, Pose(Eigen::Quaterniond::Identity(),
                                {cx + 1.2, 0.8, 0.5}), {0.4, 0.4, 0.4}, 2, {0.3, 0.5, 0.7}});
  }
  return scene;
}

TrajectorySpec square_loop_trajectory(int frames, double sigma_trans, double sigma_rot,
                                      uint64_t seed) {
  TrajectorySpec spec;
  const double r = 1.7, height = 1.3;
  const Eigen::Vector3d center(0.0, 0.0, 0.9);
  const Eigen::Vector3d corners[4] = {{r, r * 0.8, height},
                                      {-r, r * 0.8, height},
                                      {-r, -r * 0.8, height},
                                      {r, -r * 0.8, height}};
  for (const auto& c : corners) spec.waypoints.push_back(look_at(c, center));
  spec.closed = true;
  spec.frames_between = std::max(1, frames / 4);
  spec.drift_sigma_trans = sigma_trans;
  spec.drift_sigma_rot = sigma_rot;
  spec.seed = seed;
  return spec;
}

SequenceSpec parse_sequence_spec(const Config& cfg) {
  SequenceSpec spec;
  const std::string scene_name = cfg.get_string("scene.name", "default_room");
  if (scene_name == "default_room") {
    spec.scene = default_room();
  } else if (scene_name == "marker_wall") {
    spec.scene = marker_wall(cfg.get_int("scene.markers", 10));
  } else if (scene_name == "two_rooms") {
    spec.scene = two_rooms();
  } else {
    throw ConfigError("unknown scene name: " + scene_name);
  }

  const int frames = cfg.get_int("trajectory.frames", 200);
  const double sigma_t = cfg.get_double("trajectory.drift_sigma_trans", 0.0);
  const double sigma_r = cfg.get_double("trajectory.drift_sigma_rot", 0.0);
  const uint64_t seed = cfg.get_u64("trajectory.seed", 1);
  const std::string traj_name = cfg.get_string("trajectory.name", "square_loop");
  if (traj_name == "square_loop") {
    spec.trajectory = square_loop_trajectory(frames, sigma_t, sigma_r, seed);
  } else {
    throw ConfigError("unknown trajectory name: " + traj_name);
  }

  spec.intr.width = cfg.get_int("camera.width", 160);
  spec.intr.height = cfg.get_int("camera.height", 120);
  spec.intr.fx = cfg.get_double("camera.fx", 115.0);
  spec.intr.fy = cfg.get_double("camera.fy", 115.0);
  spec.intr.cx = cfg.get_double("camera.cx", spec.intr.width / 2.0);
  spec.intr.cy = cfg.get_double("camera.cy", spec.intr.height / 2.0);
  return spec;
}

void generate_sequence(const SequenceSpec& spec, const std::string& out_dir, int threads) {
  const std::vector<Pose> gt = interpolate_trajectory(spec.trajectory);
  const std::vector<Pose> odom = drift_odometry(gt, spec.trajectory);

  create_dataset_dirs(out_dir);
  DatasetManifest m;
  m.width = spec.intr.width;
  m.height = spec.intr.height;
  m.fx = spec.intr.fx;
  m.fy = spec.intr.fy;
  m.cx = spec.intr.cx;
  m.cy = spec.intr.cy;
  m.depth_scale = spec.depth_scale;
  m.num_classes = spec.scene.num_classes;
  m.frame_count = static_cast<int>(gt.size());
  write_manifest(out_dir, m);

  const int n = static_cast<int>(gt.size());
  auto render_range = [&](int begin, int stride) {
    for (int i = begin; i < n; i += stride) {
      Frame frame = render_frame(spec.scene, gt[static_cast<size_t>(i)], spec.intr);
      frame.id = i;
      save_frame(out_dir, m, frame);
    }
  };
  if (threads <= 1) {
    render_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(render_range, t, threads);
    for (auto& t : pool) t.join();
  }

  Trajectory gt_traj, odom_traj;
  for (size_t i = 0; i < gt.size(); ++i) {
    gt_traj.push_back({static_cast<double>(i), gt[i]});
    odom_traj.push_back({static_cast<double>(i), odom[i]});
  }
  write_tum_trajectory(out_dir + "/gt_traj.txt", gt_traj);
  write_tum_trajectory(out_dir + "/odom_traj.txt", odom_traj);
}

}  // namespace voxloop
