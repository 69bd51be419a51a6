#include "voxloop/pose_graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voxloop {

Twist edge_residual(const GraphEdge& edge, const PoseGraph& graph) {
  const Pose& from = graph.nodes.at(edge.from_id);
  const Pose& to = graph.nodes.at(edge.to_id);
  return log_map(compose(inverse(edge.measured), compose(from, inverse(to))));
}

double graph_loss(const PoseGraph& graph) {
  double loss = 0.0;
  for (const auto& edge : graph.edges) {
    loss += edge.weight * edge_residual(edge, graph).vector().squaredNorm();
  }
  return loss;
}

namespace {

Eigen::Matrix<double, 6, 1> residual_with(const GraphEdge& edge, const Pose& from,
                                          const Pose& to) {
  return log_map(compose(inverse(edge.measured), compose(from, inverse(to)))).vector();
}

// Central-difference Jacobian of the edge residual w.r.t. a left twist on one
// endpoint.
Eigen::Matrix<double, 6, 6> numeric_jacobian(const GraphEdge& edge, const Pose& from,
                                             const Pose& to, bool wrt_from) {
  constexpr double h = 1e-7;
  Eigen::Matrix<double, 6, 6> j;
  for (int k = 0; k < 6; ++k) {
    Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
    delta[k] = h;
    const Pose plus = compose(exp_map(Twist::from_vector(delta)), wrt_from ? from : to);
    delta[k] = -h;
    const Pose minus = compose(exp_map(Twist::from_vector(delta)), wrt_from ? from : to);
    const Eigen::Matrix<double, 6, 1> rp =
        wrt_from ? residual_with(edge, plus, to) : residual_with(edge, from, plus);
    const Eigen::Matrix<double, 6, 1> rm =
        wrt_from ? residual_with(edge, minus, to) : residual_with(edge, from, minus);
    j.col(k) = (rp - rm) / (2 * h);
  }
  return j;
}

}  // namespace

GraphOptReport optimize_graph(PoseGraph& graph, const GraphOptConfig& cfg) {
  GraphOptReport report;
  report.initial_loss = graph_loss(graph);
  report.final_loss = report.initial_loss;
  if (graph.edges.empty() || graph.nodes.size() < 2) return report;

  const int anchor = graph.nodes.count(graph.anchor_id) ? graph.anchor_id
                                                        : graph.nodes.begin()->first;
  std::map<int, int> state_index;  // node id -> block index, anchor excluded
  int blocks = 0;
  for (const auto& [id, pose] : graph.nodes) {
    if (id != anchor) state_index[id] = blocks++;
  }
  if (blocks == 0) return report;

  const PoseGraph backup = graph;
  const int dim = 6 * blocks;
  double lambda = cfg.initial_lambda;
  double loss = report.initial_loss;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (const auto& edge : graph.edges) {
      const Pose& from = graph.nodes.at(edge.from_id);
      const Pose& to = graph.nodes.at(edge.to_id);
      const Eigen::Matrix<double, 6, 1> r = residual_with(edge, from, to);
      const bool free_from = edge.from_id != anchor;
      const bool free_to = edge.to_id != anchor;
      Eigen::Matrix<double, 6, 6> ja, jb;
      if (free_from) ja = numeric_jacobian(edge, from, to, true);
      if (free_to) jb = numeric_jacobian(edge, from, to, false);

      if (free_from) {
        const int ia = 6 * state_index.at(edge.from_id);
        h.block<6, 6>(ia, ia) += edge.weight * ja.transpose() * ja;
        b.segment<6>(ia) -= edge.weight * ja.transpose() * r;
      }
      if (free_to) {
        const int ib = 6 * state_index.at(edge.to_id);
        h.block<6, 6>(ib, ib) += edge.weight * jb.transpose() * jb;
        b.segment<6>(ib) -= edge.weight * jb.transpose() * r;
      }
      if (free_from && free_to) {
        const int ia = 6 * state_index.at(edge.from_id);
        const int ib = 6 * state_index.at(edge.to_id);
        const Eigen::Matrix<double, 6, 6> cross = edge.weight * ja.transpose() * jb;
        h.block<6, 6>(ia, ib) += cross;
        h.block<6, 6>(ib, ia) += cross.transpose();
      }
    }

    // Solve with the current damping; on a numerically bad solution double the
    // damping and retry before giving up.
    Eigen::VectorXd delta;
    bool solved = false;
    for (int attempt = 0; attempt <= cfg.max_solve_retries; ++attempt) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += lambda;
      delta = damped.ldlt().solve(b);
      if (delta.allFinite()) {
        solved = true;
        break;
      }
      lambda *= 2.0;
    }
    if (!solved) {
      graph = backup;
      report.final_loss = report.initial_loss;
      report.aborted = true;
      return report;
    }

    if (delta.norm() < cfg.step_tol) break;

    PoseGraph trial = graph;
    for (const auto& [id, idx] : state_index) {
      const Eigen::Matrix<double, 6, 1> d = delta.segment<6>(6 * idx);
      trial.nodes[id] = compose(exp_map(Twist::from_vector(d)), graph.nodes.at(id));
    }
    const double trial_loss = graph_loss(trial);
    ++report.iterations;

    if (trial_loss < loss) {
      const double improvement = loss - trial_loss;
      graph = std::move(trial);
      loss = trial_loss;
      lambda *= 0.5;
      if (improvement < cfg.loss_tol) break;
    } else {
      lambda *= 2.0;
    }
  }

  report.final_loss = loss;
  return report;
}

void save_g2o(const std::string& path, const PoseGraph& graph) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write pose graph: " + path);
  for (const auto& [id, pose] : graph.nodes) {
    const auto& t = pose.translation;
    const auto& q = pose.rotation;
    std::fprintf(f, "VERTEX_SE3:QUAT %d %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", id, t.x(), t.y(),
                 t.z(), q.x(), q.y(), q.z(), q.w());
  }
  if (graph.anchor_id >= 0) std::fprintf(f, "FIX %d\n", graph.anchor_id);
  for (const auto& edge : graph.edges) {
    const auto& t = edge.measured.translation;
    const auto& q = edge.measured.rotation;
    std::fprintf(f, "EDGE_SE3:QUAT %d %d %.9f %.9f %.9f %.9f %.9f %.9f %.9f", edge.from_id,
                 edge.to_id, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    // upper-triangular information matrix, identity scaled by the weight
    for (int row = 0; row < 6; ++row) {
      for (int col = row; col < 6; ++col) {
        std::fprintf(f, " %.9f", row == col ? edge.weight : 0.0);
      }
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

PoseGraph load_g2o(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose graph: " + path);
  PoseGraph graph;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "VERTEX_SE3:QUAT") {
      int id;
      double tx, ty, tz, qx, qy, qz, qw;
      ss >> id >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
      graph.nodes[id] = Pose(Eigen::Quaterniond(qw, qx, qy, qz), Eigen::Vector3d(tx, ty, tz));
    } else if (tag == "FIX") {
      ss >> graph.anchor_id;
    } else if (tag == "EDGE_SE3:QUAT") {
      GraphEdge edge;
      double tx, ty, tz, qx, qy, qz, qw;
      ss >> edge.from_id >> edge.to_id >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
      edge.measured = Pose(Eigen::Quaterniond(qw, qx, qy, qz), Eigen::Vector3d(tx, ty, tz));
      ss >> edge.weight;  // first entry of the information matrix
      edge.kind = EdgeKind::Odometry;
      graph.edges.push_back(edge);
    }
  }
  // Edges between non-consecutive vertices (in id order) are loop edges.
  std::vector<int> ids;
  for (const auto& [id, pose] : graph.nodes) ids.push_back(id);
  for (auto& edge : graph.edges) {
    const auto a = std::lower_bound(ids.begin(), ids.end(), std::min(edge.from_id, edge.to_id));
    const auto b = std::lower_bound(ids.begin(), ids.end(), std::max(edge.from_id, edge.to_id));
    if (a == ids.end() || b == ids.end() || std::next(a) != b) edge.kind = EdgeKind::Loop;
  }
  return graph;
}

}  // namespace voxloop
