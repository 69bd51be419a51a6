// Evaluation: loop-detection precision/recall/F1 at top-1 (raw and
// post-validation), reconstruction accuracy/completion/completion-ratio,
// semantic mIoU, frustum restriction, and report emission.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "voxloop/frame.hpp"
#include "voxloop/point_cloud.hpp"

namespace voxloop {

struct MissingGroundTruthError : std::runtime_error {
  explicit MissingGroundTruthError(int query_id)
      : std::runtime_error("no loop ground-truth entry for query " + std::to_string(query_id)) {}
};
struct EmptyCloudError : std::runtime_error {
  EmptyCloudError() : std::runtime_error("recon_metrics: empty point cloud") {}
};
struct ShapeMismatchError : std::runtime_error {
  ShapeMismatchError() : std::runtime_error("miou: mask shapes differ") {}
};

/// Per query frame: place ids whose ground-truth pose differs by less than
/// 1 m translation and 35 degrees rotation.
struct LoopGroundTruth {
  std::map<int, std::set<int>> sets;
};

LoopGroundTruth build_loop_ground_truth(const std::vector<int>& query_ids,
                                        const std::vector<int>& place_ids,
                                        const std::map<int, Pose>& gt_poses,
                                        double max_trans = 1.0, double max_rot_deg = 35.0);

struct LoopLogEntry {
  int query_id = 0;
  int place_id = 0;
  double similarity = 0.0;
  double geo_overlap = 0.0;
  double sem_agreement = 0.0;
  bool accepted = false;
};

std::vector<LoopLogEntry> read_loop_log_csv(const std::string& path);
void write_loop_log_csv(const std::string& path, const std::vector<LoopLogEntry>& log);

struct LoopMetrics {
  // raw: every top-1 retrieval counts as a prediction (pre-validation)
  double raw_precision = 0.0, raw_recall = 0.0, raw_f1 = 0.0;
  // validated: only accepted candidates count as predictions
  double precision = 0.0, recall_at_1 = 0.0, f1 = 0.0;
  int queries = 0, queries_with_gt = 0, accepted = 0;
  int correct_top1 = 0, correct_accepted = 0;
  bool recall_defined = true;  // false when no query has a ground-truth loop
};

/// Throws MissingGroundTruthError when a logged query has no gt entry.
LoopMetrics loop_metrics(const std::vector<LoopLogEntry>& log, const LoopGroundTruth& gt);

struct ReconMetrics {
  double acc_cm = 0.0;         // mean predicted->gt nearest-neighbor distance
  double comp_cm = 0.0;        // mean gt->predicted
  double comp_ratio_pct = 0.0; // % of gt points with a neighbor < ratio_dist
};

ReconMetrics recon_metrics(const PointCloud& predicted, const PointCloud& gt,
                           double ratio_dist = 0.05);

/// Mean over classes present in gt of per-class IoU. `valid` restricts the
/// evaluation (empty = all pixels).
double miou(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt, int num_classes,
            const std::vector<uint8_t>& valid = {});

/// Keeps points visible from at least one pose (projecting into the image
/// bounds with depth in (near, max_depth)).
PointCloud filter_to_frustums(const PointCloud& cloud, const std::vector<Pose>& poses,
                              const Intrinsics& intr, double near = 0.05,
                              double max_depth = 10.0);

struct MetricsReport {
  double ate_rmse_m = 0.0;
  LoopMetrics loop;
  ReconMetrics recon;
  double miou_value = 0.0;
  bool has_recon = false, has_miou = false;
  std::vector<std::pair<std::string, double>> runtime_s;  // per-stage seconds
};

void write_metrics_csv(const std::string& path, const MetricsReport& report);
void write_metrics_txt(const std::string& path, const MetricsReport& report);

}  // namespace voxloop
