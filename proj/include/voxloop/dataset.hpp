// Dataset directory layout shared by synthetic generation and ingestion:
//   manifest.txt     key=value: width height fx fy cx cy depth_scale
//                    num_classes frame_count
//   color/%06d.ppm   8-bit binary PPM
//   depth/%06d.pgm   16-bit binary PGM, meters = value / depth_scale, 0 invalid
//   sem/%06d.pgm     8-bit binary PGM of class ids
//   gt_traj.txt      optional, TUM format
//   odom_traj.txt    optional, TUM format (drifted odometry)

#pragma once

#include <string>

#include "voxloop/frame.hpp"
#include "voxloop/trajectory.hpp"

namespace voxloop {

struct DatasetError : std::runtime_error {
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetManifest {
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  double depth_scale = 5000.0;
  int num_classes = 0;
  int frame_count = 0;

  Intrinsics intrinsics() const { return Intrinsics{width, height, fx, fy, cx, cy}; }
};

DatasetManifest read_manifest(const std::string& dir);
void write_manifest(const std::string& dir, const DatasetManifest& m);

Frame load_frame(const std::string& dir, const DatasetManifest& m, int id);
void save_frame(const std::string& dir, const DatasetManifest& m, const Frame& frame);

/// Creates dir plus the color/, depth/, sem/ subdirectories.
void create_dataset_dirs(const std::string& dir);

}  // namespace voxloop
