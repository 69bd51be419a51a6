// Fixed sinusoidal-bin positional encoding. Coordinates are normalized into
// [0,1] by the scene bounds, then each axis is expanded into `bins_per_axis`
// values, alternating sine and cosine over octave frequencies, squashed into
// [0,1]. Deterministic, with an analytic Jacobian for pose/tracking gradients.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace voxloop {

struct OutOfBoundsError : std::runtime_error {
  OutOfBoundsError() : std::runtime_error("query point outside scene bounds") {}
};

struct EncodingConfig {
  int bins_per_axis = 16;
  Eigen::Vector3d bounds_min = Eigen::Vector3d(-5.0, -5.0, -5.0);
  Eigen::Vector3d bounds_max = Eigen::Vector3d(5.0, 5.0, 5.0);

  int dim() const { return 3 * bins_per_axis; }

  bool contains(const Eigen::Vector3d& x) const {
    return (x.array() >= bounds_min.array()).all() && (x.array() <= bounds_max.array()).all();
  }
};

/// gamma(x): 3*bins values in [0,1].
inline Eigen::VectorXd encode_position(const EncodingConfig& cfg, const Eigen::Vector3d& x) {
  Eigen::VectorXd g(cfg.dim());
  for (int a = 0; a < 3; ++a) {
    const double span = cfg.bounds_max[a] - cfg.bounds_min[a];
    const double u = (x[a] - cfg.bounds_min[a]) / span;
    for (int k = 0; k < cfg.bins_per_axis; ++k) {
      const double freq = std::pow(2.0, k / 2) * M_PI;
      const double phase = freq * u;
      const double s = (k % 2 == 0) ? std::sin(phase) : std::cos(phase);
      g[a * cfg.bins_per_axis + k] = 0.5 * (1.0 + s);
    }
  }
  return g;
}

/// d gamma / d x, one 3-column Jacobian row per encoding entry.
inline Eigen::MatrixXd encode_position_jacobian(const EncodingConfig& cfg,
                                                const Eigen::Vector3d& x) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(cfg.dim(), 3);
  for (int a = 0; a < 3; ++a) {
    const double span = cfg.bounds_max[a] - cfg.bounds_min[a];
    const double u = (x[a] - cfg.bounds_min[a]) / span;
    for (int k = 0; k < cfg.bins_per_axis; ++k) {
      const double freq = std::pow(2.0, k / 2) * M_PI;
      const double phase = freq * u;
      const double ds = (k % 2 == 0) ? std::cos(phase) : -std::sin(phase);
      j(a * cfg.bins_per_axis + k, a) = 0.5 * ds * freq / span;
    }
  }
  return j;
}

}  // namespace voxloop
