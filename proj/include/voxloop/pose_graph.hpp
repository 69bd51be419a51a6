// SE(3) pose graph: twist residuals per edge, Levenberg-Marquardt with a
// trust-region damping schedule over dense normal equations, and g2o-style
// text dump/load.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "voxloop/se3.hpp"

namespace voxloop {

enum class EdgeKind { Odometry, Loop };

struct GraphEdge {
  int from_id = 0;
  int to_id = 0;
  Pose measured;  // T_edge: consistent when equal to node_from * node_to^-1
  EdgeKind kind = EdgeKind::Odometry;
  double weight = 1.0;
};

struct PoseGraph {
  std::map<int, Pose> nodes;
  std::vector<GraphEdge> edges;
  int anchor_id = -1;  // defaults to the lowest node id when unset
};

/// e = log(measured^-1 * node_from * node_to^-1); zero for a consistent edge.
Twist edge_residual(const GraphEdge& edge, const PoseGraph& graph);

/// Sum of weighted squared residual norms over all edges.
double graph_loss(const PoseGraph& graph);

struct GraphOptConfig {
  int max_iterations = 100;
  double loss_tol = 1e-9;
  double step_tol = 1e-8;
  double initial_lambda = 1e-3;
  int max_solve_retries = 5;
};

struct GraphOptReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
  bool aborted = false;  // singular normal equations after all retries
};

/// LM with gain-driven damping (x0.5 on accepted steps, x2 on rejections).
/// The anchor node is held fixed. Only accepted steps are applied, so the
/// final loss never exceeds the initial one; on abort the graph is restored.
GraphOptReport optimize_graph(PoseGraph& graph, const GraphOptConfig& cfg = GraphOptConfig{});

/// g2o-style text: VERTEX_SE3:QUAT / EDGE_SE3:QUAT with an upper-triangular
/// information matrix (identity scaled by the edge weight), plus FIX for the
/// anchor.
void save_g2o(const std::string& path, const PoseGraph& graph);
PoseGraph load_g2o(const std::string& path);

}  // namespace voxloop
