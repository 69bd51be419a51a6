// Hybrid scene representation: latent-code voxel hashing plus the three-MLP
// decoder stack, the multi-term training loss with reverse-mode gradients,
// SGD map optimization, and zero-crossing surface extraction.

#pragma once

#include <functional>
#include <random>

#include "voxloop/decoders.hpp"
#include "voxloop/encoding.hpp"
#include "voxloop/frame.hpp"
#include "voxloop/latent_grid.hpp"
#include "voxloop/point_cloud.hpp"

namespace voxloop {

struct EmptyBatchError : std::runtime_error {
  EmptyBatchError() : std::runtime_error("total_loss: empty ray batch") {}
};

struct LossWeights {
  double rgb = 5.0;
  double depth = 1.0;
  double sdf = 200.0;
  double fs = 2.0;
  double sem = 10.0;  // lambda_sem default
  double smooth = 0.01;
};

struct SceneFieldConfig {
  LatentGridConfig grid;
  EncodingConfig encoding;
  int hidden = 32;
  int classes = 5;
  double truncation = 0.25;  // 5 x finest voxel size
  uint64_t seed = 42;
};

class SceneField {
 public:
  explicit SceneField(const SceneFieldConfig& cfg);

  const SceneFieldConfig& config() const { return cfg_; }
  LatentGrid& grid() { return grid_; }
  const LatentGrid& grid() const { return grid_; }
  DecoderStack& stack() { return stack_; }
  const DecoderStack& stack() const { return stack_; }

  /// (latent, gamma) at x. Throws OutOfBoundsError outside the scene bounds.
  void query(const Eigen::Vector3d& x, Eigen::VectorXd* latent, Eigen::VectorXd* gamma) const;

  DecodeResult decode_at(const Eigen::Vector3d& x) const;
  double sdf_at(const Eigen::Vector3d& x) const;
  /// Analytic field gradient d(sdf)/dx through interpolation, encoding and MLP.
  Eigen::Vector3d sdf_gradient(const Eigen::Vector3d& x) const;

 private:
  SceneFieldConfig cfg_;
  LatentGrid grid_;
  DecoderStack stack_;
};

// --- training batches ---------------------------------------------------

struct Ray {
  int pose_index = 0;  // into RayBatch::poses
  Eigen::Vector3d dir_cam = Eigen::Vector3d::UnitZ();  // unit-z direction
  double depth = 0.0;
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  int label = 0;
  std::vector<double> zs;  // sample depths along camera z, ascending
};

struct RayBatch {
  std::vector<Ray> rays;
  std::vector<Pose> poses;
  std::vector<int> frame_ids;  // one per pose
  bool empty() const { return rays.empty(); }
};

struct RaySamplingConfig {
  int near_samples = 6;
  int free_samples = 3;
  double near_clip = 0.1;
};

/// Samples `count` seeded random valid-depth pixels of the frame and builds
/// their rays. Allocates grid vertices around near-surface samples when
/// `training_grid` is given (the training-write allocation policy).
RayBatch build_ray_batch(const Frame& frame, const Pose& pose, int count,
                         const RaySamplingConfig& sampling, double truncation,
                         std::mt19937_64& rng, LatentGrid* training_grid);

/// Merges batches from several frames into one (poses deduplicated per frame).
RayBatch merge_batches(const std::vector<RayBatch>& batches);

// --- loss and gradients ---------------------------------------------------

struct LossBreakdown {
  double rgb = 0, depth = 0, sdf = 0, fs = 0, sem = 0, smooth = 0;
  double total = 0;
  int rendered_rays = 0, near_samples = 0, free_samples = 0;
};

/// Dense per-parameter gradient buffers with touched-slot tracking so that
/// zeroing and SGD updates only visit what the batch used.
struct FieldGradients {
  std::vector<Eigen::MatrixXd> code_grads;  // per level, F x capacity
  std::vector<std::vector<int>> touched;    // slots with nonzero grads
  std::vector<std::vector<uint8_t>> dirty;
  DecodeGrads decoder;

  static FieldGradients make(const SceneField& field);
  void add_code_grad(int level, int slot, const Eigen::Ref<const Eigen::VectorXd>& g);
  void clear(const SceneField& field);
};

/// Gradient of the total loss w.r.t. a left-multiplicative twist on each
/// batch pose, [d/domega; d/dv] stacked.
using PoseGradients = std::vector<Eigen::Matrix<double, 6, 1>>;

/// Weighted sum of the six loss terms. Gradients (optional) accumulate into
/// `grads` and `pose_grads`; both may be null for loss-only evaluation.
LossBreakdown total_loss(const RayBatch& batch, const SceneField& field, const LossWeights& w,
                         FieldGradients* grads, PoseGradients* pose_grads);

/// Mean cross-entropy of one-hot labels against predicted class probabilities.
double cross_entropy(const Eigen::VectorXd& onehot, const Eigen::VectorXd& probs);

// --- optimization -----------------------------------------------------------

struct OptimizerConfig {
  double lr_codes = 0.05;
  double lr_decoder = 0.01;
  double lr_sem = 0.05;
  double momentum = 0.9;
  int batch_rays = 1024;
  RaySamplingConfig sampling;
};

/// SGD with momentum over latent codes and decoder weights; per-group
/// learning rates (codes / geom+color / sem).
class MapOptimizer {
 public:
  MapOptimizer(const SceneField& field, const OptimizerConfig& cfg);

  /// One step on a prebuilt batch. Returns the loss at the point of the step.
  LossBreakdown step(SceneField& field, const RayBatch& batch, const LossWeights& weights);

  /// Joint map + pose step for bundle adjustment: also descends the batch
  /// poses with learning rate `pose_lr` and writes them back to the batch.
  LossBreakdown step_with_poses(SceneField& field, RayBatch& batch, const LossWeights& weights,
                                double pose_lr, const std::vector<bool>& pose_free);

  const OptimizerConfig& config() const { return cfg_; }

 private:
  void apply(SceneField& field);

  OptimizerConfig cfg_;
  FieldGradients grads_;
  std::vector<Eigen::MatrixXd> code_momentum_;
  DecodeGrads decoder_momentum_;
};

/// `iters` SGD steps; each batch mixes rays from `frames` (most from the
/// last frame, the rest from seeded random earlier ones). Poses are read from
/// the frames. Returns the last step's loss.
LossBreakdown optimize_map(SceneField& field, MapOptimizer& opt,
                           const std::vector<const Frame*>& frames, int iters,
                           const LossWeights& weights, std::mt19937_64& rng);

// --- surface extraction ---------------------------------------------------

/// Zero-crossing extraction from an arbitrary SDF sampler, with
/// finite-difference normals and a label sampler for class ids.
PointCloud extract_cloud_from_field(const std::function<double(const Eigen::Vector3d&)>& sdf,
                                    const std::function<int(const Eigen::Vector3d&)>& label,
                                    const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                                    double step, double truncation);

/// Dense-grid sampling of the scene field's SDF over `bounds`; emits
/// zero-crossing points along grid edges with normals and argmax labels.
PointCloud extract_cloud(const SceneField& field, const Eigen::Vector3d& lo,
                         const Eigen::Vector3d& hi, double step);

// --- checkpoints ------------------------------------------------------------

/// Self-describing binary checkpoint ("SLC2" magic, little-endian f32 blocks).
/// Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const SceneField& field);
SceneField load_checkpoint(const std::string& path);

}  // namespace voxloop
