// Full-pipeline runner: per-frame pose propagation (odometry deltas or
// SDF-residual tracking), keyframe-driven mapping, semantic-guided loop
// detection and closure, artifact emission, plus the detection-only
// loopbench and the offline evaluator.

#pragma once

#include <optional>

#include "voxloop/config.hpp"
#include "voxloop/dataset.hpp"
#include "voxloop/keyframes.hpp"
#include "voxloop/loop_closure.hpp"
#include "voxloop/metrics.hpp"
#include "voxloop/sampling.hpp"
#include "voxloop/scene_field.hpp"
#include "voxloop/tracking.hpp"
#include "voxloop/vlad.hpp"

namespace voxloop {

enum class TrackingMode { Odometry, Sdf };
enum class SamplingMode { Semantic, Random };

struct RunConfig {
  std::string dataset_dir;
  std::string out_dir = "run_out";

  // hierarchy and validation thresholds
  HierarchyConfig hierarchy;   // tau_place = 0.3, tau_covis = 0.45
  double theta_geo = 0.5;
  double theta_sem = 0.6;

  // descriptor pipeline
  SamplingMode sampling = SamplingMode::Semantic;
  int samples_per_frame = 256;  // M
  int codebook_k = 16;          // K
  int min_place_frames = 3;     // codebook training trigger
  int recent_exclusion_frames = 50;  // skip places younger than this many frames

  // scene field
  SceneFieldConfig field;  // truncation derived from voxel sizes below
  double truncation_factor = 5.0;

  // optimization
  OptimizerConfig optimizer;
  LossWeights weights;
  int map_iters_per_keyframe = 10;

  // tracking
  TrackingMode tracking = TrackingMode::Odometry;
  TrackingConfig tracking_cfg;

  // loop closure
  bool loop_closure = true;
  CloseLoopConfig closing;
  IcpConfig icp;

  uint64_t seed = 1;
  int threads = 1;

  static RunConfig from_config(const Config& cfg);
  Config to_config() const;  // effective-config dump, every default included
};

struct RunResult {
  Trajectory estimated;
  std::vector<LoopLogEntry> loop_log;
  KeyframeSet kset;
  int loops_closed = 0;
  int frames = 0;
  double ate_vs_gt = -1.0;   // -1 when no ground truth is bundled
  double ate_odometry = -1.0;
  MetricsReport report;
};

/// Runs the pipeline over the dataset and writes traj_est.txt, loop_log.csv,
/// checkpoint.bin, descriptors.csv, effective_config.txt, events.jsonl,
/// metrics.{csv,txt} and pose_graph_*.g2o under cfg.out_dir.
RunResult run_pipeline(const RunConfig& cfg);

// --- loopbench ---------------------------------------------------------------

struct LoopbenchConfig {
  int num_places = 10;
  int queries_per_place = 3;
  int samples_per_frame = 64;  // M
  int codebook_k = 8;
  int map_iters = 120;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  Intrinsics intr{160, 120, 115.0, 115.0, 80.0, 60.0};
  uint64_t map_seed = 7;
};

struct LoopbenchRow {
  std::string mode;
  uint64_t seed = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Detection-only benchmark on the marker-wall scene: shared map and
/// codebook, per-seed descriptor sampling for semantic and random modes,
/// top-1 retrieval scored against the pose-derived ground truth.
std::vector<LoopbenchRow> run_loopbench(const LoopbenchConfig& cfg);

void write_loopbench_csv(const std::string& path, const std::vector<LoopbenchRow>& rows);

// --- offline evaluation -------------------------------------------------------

struct EvalConfig {
  std::string run_dir;
  std::string dataset_dir;
  double recon_step = 0.04;
  double frustum_max_depth = 10.0;
  int miou_frame_stride = 10;
  int recon_gt_stride = 4;
};

/// Recomputes the metrics report from run artifacts plus the dataset ground
/// truth, writes metrics.{csv,txt} and the SVG plots into run_dir. Throws
/// DatasetError when an artifact is missing.
MetricsReport evaluate_run(const EvalConfig& cfg);

}  // namespace voxloop
