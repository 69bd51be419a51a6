#include "voxloop/trajectory.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voxloop {

Trajectory read_tum_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error("malformed trajectory line: " + line);
    }
    TimedPose tp;
    tp.timestamp = ts;
    tp.pose = Pose(Eigen::Quaterniond(qw, qx, qy, qz), Eigen::Vector3d(tx, ty, tz));
    traj.push_back(tp);
  }
  return traj;
}

void write_tum_trajectory(const std::string& path, const Trajectory& traj) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write trajectory file: " + path);
  std::fprintf(f, "# timestamp tx ty tz qx qy qz qw\n");
  for (const auto& tp : traj) {
    const auto& q = tp.pose.rotation;
    const auto& t = tp.pose.translation;
    std::fprintf(f, "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", tp.timestamp, t.x(), t.y(),
                 t.z(), q.x(), q.y(), q.z(), q.w());
  }
  std::fclose(f);
}

Pose umeyama_alignment(const std::vector<Pose>& source, const std::vector<Pose>& target) {
  if (source.size() != target.size()) throw LengthMismatchError(source.size(), target.size());
  if (source.empty()) throw std::runtime_error("umeyama_alignment: empty trajectories");

  const int n = static_cast<int>(source.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (int i = 0; i < n; ++i) {
    src.col(i) = source[i].translation;
    dst.col(i) = target[i].translation;
  }
  // Eigen's closed-form Umeyama with scaling disabled.
  const Eigen::Matrix4d m = Eigen::umeyama(src, dst, false);
  return Pose(Eigen::Quaterniond(Eigen::Matrix3d(m.topLeftCorner<3, 3>())),
              Eigen::Vector3d(m.topRightCorner<3, 1>()));
}

double ate_rmse(const std::vector<Pose>& estimated, const std::vector<Pose>& ground_truth) {
  if (estimated.size() != ground_truth.size())
    throw LengthMismatchError(estimated.size(), ground_truth.size());
  if (estimated.empty()) throw std::runtime_error("ate_rmse: empty trajectories");

  const Pose align = umeyama_alignment(estimated, ground_truth);
  double sq_sum = 0.0;
  for (size_t i = 0; i < estimated.size(); ++i) {
    const Eigen::Vector3d r = align * estimated[i].translation - ground_truth[i].translation;
    sq_sum += r.squaredNorm();
  }
  return std::sqrt(sq_sum / static_cast<double>(estimated.size()));
}

std::vector<Pose> poses_of(const Trajectory& traj) {
  std::vector<Pose> out;
  out.reserve(traj.size());
  for (const auto& tp : traj) out.push_back(tp.pose);
  return out;
}

}  // namespace voxloop
