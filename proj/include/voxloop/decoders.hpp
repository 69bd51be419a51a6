// Small dense MLPs with hand-rolled reverse-mode gradients, and the decoder
// stack mapping (latent, gamma) -> SDF, hidden feature, RGB, class logits.

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace voxloop {

struct DimensionMismatchError : std::runtime_error {
  explicit DimensionMismatchError(const std::string& what) : std::runtime_error(what) {}
};

enum class Activation { None, Tanh, Sigmoid };

struct DenseLayer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
  Activation act = Activation::None;
};

struct MlpCache {
  std::vector<Eigen::VectorXd> inputs;   // input to each layer
  std::vector<Eigen::VectorXd> outputs;  // post-activation output of each layer
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

class Mlp {
 public:
  Mlp() = default;

  void add_layer(int in, int out, Activation act) {
    layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out), act});
  }

  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().w.cols()); }
  int output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().w.rows()); }

  /// Xavier-uniform weights, zero biases.
  void init_random(std::mt19937_64& rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& in, MlpCache* cache = nullptr) const;

  /// Accumulates parameter gradients into `grads` (must be zero-or-shaped via
  /// make_grads) and returns dL/d(input).
  Eigen::VectorXd backward(const MlpCache& cache, const Eigen::VectorXd& dout,
                           MlpGrads* grads) const;

  MlpGrads make_grads() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  size_t parameter_count() const;

 private:
  std::vector<DenseLayer> layers_;
};

struct DecoderConfig {
  int latent_dim = 16;  // F * levels
  int gamma_dim = 48;
  int hidden = 32;  // H, width of the geometry feature
  int classes = 5;  // C
};

/// GeomNet (latent+gamma -> sdf + hidden h), ColorNet (h+gamma -> rgb in
/// [0,1]), SemNet (h+gamma -> C logits; 4 layers, 32 hidden neurons).
struct DecoderStack {
  DecoderConfig cfg;
  Mlp geom;
  Mlp color;
  Mlp sem;

  static DecoderStack create(const DecoderConfig& cfg, uint64_t seed);
};

struct DecodeResult {
  double sdf = 0.0;
  Eigen::VectorXd hidden;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  Eigen::VectorXd logits;
};

struct DecodeCache {
  MlpCache geom, color, sem;
  Eigen::VectorXd latent, gamma;
};

/// Deterministic forward pass. Throws DimensionMismatchError when the inputs
/// do not match the stack configuration.
DecodeResult decode(const DecoderStack& stack, const Eigen::VectorXd& latent,
                    const Eigen::VectorXd& gamma, DecodeCache* cache = nullptr);

struct DecodeGrads {
  MlpGrads geom, color, sem;
};

/// Backward pass through all three nets. Upstream gradients may be empty
/// (treated as zero). Returns dL/dlatent and dL/dgamma.
void decode_backward(const DecoderStack& stack, const DecodeCache& cache, double dsdf,
                     const Eigen::Vector3d& dcolor, const Eigen::VectorXd& dlogits,
                     DecodeGrads* grads, Eigen::VectorXd* dlatent, Eigen::VectorXd* dgamma);

DecodeGrads make_decode_grads(const DecoderStack& stack);

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace voxloop
