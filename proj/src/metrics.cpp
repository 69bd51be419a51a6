#include "voxloop/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voxloop {

LoopGroundTruth build_loop_ground_truth(const std::vector<int>& query_ids,
                                        const std::vector<int>& place_ids,
                                        const std::map<int, Pose>& gt_poses, double max_trans,
                                        double max_rot_deg) {
  LoopGroundTruth gt;
  const double max_rot = max_rot_deg * M_PI / 180.0;
  for (int q : query_ids) {
    std::set<int>& set = gt.sets[q];
    const Pose& qp = gt_poses.at(q);
    for (int p : place_ids) {
      if (p == q) continue;
      const Pose& pp = gt_poses.at(p);
      if (translation_distance(qp, pp) < max_trans && rotation_distance(qp, pp) < max_rot) {
        set.insert(p);
      }
    }
  }
  return gt;
}

std::vector<LoopLogEntry> read_loop_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open loop log: " + path);
  std::vector<LoopLogEntry> log;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LoopLogEntry e;
    int accepted = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%d", &e.query_id, &e.place_id,
                    &e.similarity, &e.geo_overlap, &e.sem_agreement, &accepted) != 6) {
      throw std::runtime_error("malformed loop log line: " + line);
    }
    e.accepted = accepted != 0;
    log.push_back(e);
  }
  return log;
}

void write_loop_log_csv(const std::string& path, const std::vector<LoopLogEntry>& log) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write loop log: " + path);
  std::fprintf(f, "query_id,place_id,similarity,geo_overlap,sem_agreement,accepted\n");
  for (const auto& e : log) {
    std::fprintf(f, "%d,%d,%.6f,%.6f,%.6f,%d\n", e.query_id, e.place_id, e.similarity,
                 e.geo_overlap, e.sem_agreement, e.accepted ? 1 : 0);
  }
  std::fclose(f);
}

namespace {
double f1_of(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }
}  // namespace

LoopMetrics loop_metrics(const std::vector<LoopLogEntry>& log, const LoopGroundTruth& gt) {
  LoopMetrics m;
  m.queries = static_cast<int>(log.size());
  for (const auto& e : log) {
    const auto it = gt.sets.find(e.query_id);
    if (it == gt.sets.end()) throw MissingGroundTruthError(e.query_id);
    const bool has_gt = !it->second.empty();
    const bool correct = it->second.count(e.place_id) > 0;
    if (has_gt) ++m.queries_with_gt;
    if (correct) ++m.correct_top1;
    if (e.accepted) {
      ++m.accepted;
      if (correct) ++m.correct_accepted;
    }
  }

  m.raw_precision = m.queries > 0 ? static_cast<double>(m.correct_top1) / m.queries : 0.0;
  m.precision = m.accepted > 0 ? static_cast<double>(m.correct_accepted) / m.accepted : 0.0;
  if (m.queries_with_gt > 0) {
    m.raw_recall = static_cast<double>(m.correct_top1) / m.queries_with_gt;
    m.recall_at_1 = static_cast<double>(m.correct_accepted) / m.queries_with_gt;
  } else {
    m.recall_defined = false;
    m.raw_recall = 0.0;
    m.recall_at_1 = 0.0;
  }
  m.raw_f1 = f1_of(m.raw_precision, m.raw_recall);
  m.f1 = f1_of(m.precision, m.recall_at_1);
  return m;
}

ReconMetrics recon_metrics(const PointCloud& predicted, const PointCloud& gt,
                           double ratio_dist) {
  if (predicted.empty() || gt.empty()) throw EmptyCloudError();
  ReconMetrics m;

  const GridIndex gt_index(gt.points, ratio_dist);
  double acc_sum = 0.0;
  for (const auto& p : predicted.points) {
    double d = 0.0;
    gt_index.nearest(p, &d);
    acc_sum += d;
  }
  m.acc_cm = 100.0 * acc_sum / static_cast<double>(predicted.size());

  const GridIndex pred_index(predicted.points, ratio_dist);
  double comp_sum = 0.0;
  size_t within = 0;
  for (const auto& p : gt.points) {
    double d = 0.0;
    pred_index.nearest(p, &d);
    comp_sum += d;
    if (d < ratio_dist) ++within;
  }
  m.comp_cm = 100.0 * comp_sum / static_cast<double>(gt.size());
  m.comp_ratio_pct = 100.0 * static_cast<double>(within) / static_cast<double>(gt.size());
  return m;
}

double miou(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt, int num_classes,
            const std::vector<uint8_t>& valid) {
  if (pred.size() != gt.size() || (!valid.empty() && valid.size() != gt.size())) {
    throw ShapeMismatchError();
  }
  std::vector<long long> inter(static_cast<size_t>(num_classes), 0);
  std::vector<long long> uni(static_cast<size_t>(num_classes), 0);
  std::vector<bool> present(static_cast<size_t>(num_classes), false);
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!valid.empty() && !valid[i]) continue;
    const int g = gt[i], p = pred[i];
    if (g < num_classes) present[static_cast<size_t>(g)] = true;
    if (g == p) {
      if (g < num_classes) ++inter[static_cast<size_t>(g)];
    }
    if (g < num_classes) ++uni[static_cast<size_t>(g)];
    if (p < num_classes && p != g) ++uni[static_cast<size_t>(p)];
  }
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (!present[static_cast<size_t>(c)]) continue;
    ++classes;
    if (uni[static_cast<size_t>(c)] > 0) {
      sum += static_cast<double>(inter[static_cast<size_t>(c)]) /
             static_cast<double>(uni[static_cast<size_t>(c)]);
    }
  }
  return classes > 0 ? sum / classes : 0.0;
}

PointCloud filter_to_frustums(const PointCloud& cloud, const std::vector<Pose>& poses,
                              const Intrinsics& intr, double near, double max_depth) {
  std::vector<Pose> inverses;
  inverses.reserve(poses.size());
  for (const auto& p : poses) inverses.push_back(inverse(p));

  PointCloud out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    bool visible = false;
    for (const auto& inv : inverses) {
      const Eigen::Vector3d c = inv * p;
      if (c.z() < near || c.z() > max_depth) continue;
      const double u = intr.fx * c.x() / c.z() + intr.cx;
      const double v = intr.fy * c.y() / c.z() + intr.cy;
      if (u >= 0 && u < intr.width && v >= 0 && v < intr.height) {
        visible = true;
        break;
      }
    }
    if (!visible) continue;
    out.points.push_back(p);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
  }
  return out;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write metrics csv: " + path);
  std::fprintf(f, "metric,value\n");
  std::fprintf(f, "ate_rmse_m,%.6f\n", report.ate_rmse_m);
  std::fprintf(f, "loop_precision,%.6f\n", report.loop.precision);
  std::fprintf(f, "loop_recall_at_1,%.6f\n", report.loop.recall_at_1);
  std::fprintf(f, "loop_f1,%.6f\n", report.loop.f1);
  std::fprintf(f, "loop_raw_precision,%.6f\n", report.loop.raw_precision);
  std::fprintf(f, "loop_raw_recall,%.6f\n", report.loop.raw_recall);
  std::fprintf(f, "loop_raw_f1,%.6f\n", report.loop.raw_f1);
  std::fprintf(f, "loop_recall_defined,%d\n", report.loop.recall_defined ? 1 : 0);
  if (report.has_recon) {
    std::fprintf(f, "recon_acc_cm,%.6f\n", report.recon.acc_cm);
    std::fprintf(f, "recon_comp_cm,%.6f\n", report.recon.comp_cm);
    std::fprintf(f, "recon_comp_ratio_pct,%.6f\n", report.recon.comp_ratio_pct);
  }
  if (report.has_miou) std::fprintf(f, "miou,%.6f\n", report.miou_value);
  for (const auto& [stage, seconds] : report.runtime_s) {
    std::fprintf(f, "runtime_%s_s,%.3f\n", stage.c_str(), seconds);
  }
  std::fclose(f);
}

void write_metrics_txt(const std::string& path, const MetricsReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write metrics table: " + path);
  std::fprintf(f, "%-28s %12s\n", "metric", "value");
  std::fprintf(f, "%-28s %12.4f\n", "ATE RMSE [m]", report.ate_rmse_m);
  std::fprintf(f, "%-28s %12.4f\n", "loop precision", report.loop.precision);
  std::fprintf(f, "%-28s %12.4f\n", "loop recall@1", report.loop.recall_at_1);
  std::fprintf(f, "%-28s %12.4f\n", "loop F1", report.loop.f1);
  std::fprintf(f, "%-28s %12.4f\n", "loop raw precision", report.loop.raw_precision);
  std::fprintf(f, "%-28s %12.4f\n", "loop raw recall@1", report.loop.raw_recall);
  std::fprintf(f, "%-28s %12.4f\n", "loop raw F1", report.loop.raw_f1);
  if (report.has_recon) {
    std::fprintf(f, "%-28s %12.4f\n", "recon Acc [cm]", report.recon.acc_cm);
    std::fprintf(f, "%-28s %12.4f\n", "recon Comp [cm]", report.recon.comp_cm);
    std::fprintf(f, "%-28s %12.4f\n", "recon Comp Ratio [<5cm %]", report.recon.comp_ratio_pct);
  }
  if (report.has_miou) std::fprintf(f, "%-28s %12.4f\n", "mIoU", report.miou_value);
  for (const auto& [stage, seconds] : report.runtime_s) {
    std::fprintf(f, "%-28s %12.3f\n", ("runtime " + stage + " [s]").c_str(), seconds);
  }
  std::fclose(f);
}

}  // namespace voxloop
