#include "voxloop/decoders.hpp"

#include <cmath>

namespace voxloop {

namespace {

Eigen::VectorXd apply_activation(Activation act, const Eigen::VectorXd& z) {
  switch (act) {
    case Activation::None:
      return z;
    case Activation::Tanh:
      return z.array().tanh();
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

// Derivative expressed through the post-activation output y.
Eigen::VectorXd activation_grad_from_output(Activation act, const Eigen::VectorXd& y) {
  switch (act) {
    case Activation::None:
      return Eigen::VectorXd::Ones(y.size());
    case Activation::Tanh:
      return (1.0 - y.array().square()).matrix();
    case Activation::Sigmoid:
      return (y.array() * (1.0 - y.array())).matrix();
  }
  return Eigen::VectorXd::Ones(y.size());
}

}  // namespace

void Mlp::init_random(std::mt19937_64& rng) {
  for (auto& layer : layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.w.rows() + layer.w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = dist(rng);
    layer.b.setZero();
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& in, MlpCache* cache) const {
  if (in.size() != input_dim()) {
    throw DimensionMismatchError("Mlp::forward: input size " + std::to_string(in.size()) +
                                 " != " + std::to_string(input_dim()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Eigen::VectorXd x = in;
  for (const auto& layer : layers_) {
    if (cache) cache->inputs.push_back(x);
    Eigen::VectorXd y = apply_activation(layer.act, layer.w * x + layer.b);
    if (cache) cache->outputs.push_back(y);
    x = std::move(y);
  }
  return x;
}

Eigen::VectorXd Mlp::backward(const MlpCache& cache, const Eigen::VectorXd& dout,
                              MlpGrads* grads) const {
  Eigen::VectorXd delta = dout;
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const DenseLayer& layer = layers_[static_cast<size_t>(l)];
    const Eigen::VectorXd dz =
        delta.cwiseProduct(activation_grad_from_output(layer.act, cache.outputs[static_cast<size_t>(l)]));
    if (grads) {
      grads->dw[static_cast<size_t>(l)].noalias() +=
          dz * cache.inputs[static_cast<size_t>(l)].transpose();
      grads->db[static_cast<size_t>(l)] += dz;
    }
    delta = layer.w.transpose() * dz;
  }
  return delta;
}

MlpGrads Mlp::make_grads() const {
  MlpGrads g;
  for (const auto& layer : layers_) {
    g.dw.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
    g.db.push_back(Eigen::VectorXd::Zero(layer.b.size()));
  }
  return g;
}

size_t Mlp::parameter_count() const {
  size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<size_t>(layer.w.size()) + static_cast<size_t>(layer.b.size());
  }
  return n;
}

DecoderStack DecoderStack::create(const DecoderConfig& cfg, uint64_t seed) {
  DecoderStack s;
  s.cfg = cfg;
  const int geom_in = cfg.latent_dim + cfg.gamma_dim;
  const int head_in = cfg.hidden + cfg.gamma_dim;

  s.geom.add_layer(geom_in, 32, Activation::Tanh);
  s.geom.add_layer(32, 1 + cfg.hidden, Activation::None);

  s.color.add_layer(head_in, 32, Activation::Tanh);
  s.color.add_layer(32, 3, Activation::Sigmoid);

  // 4 layers, 32 hidden neurons throughout.
  s.sem.add_layer(head_in, 32, Activation::Tanh);
  s.sem.add_layer(32, 32, Activation::Tanh);
  s.sem.add_layer(32, 32, Activation::Tanh);
  s.sem.add_layer(32, cfg.classes, Activation::None);

  std::mt19937_64 rng(seed);
  s.geom.init_random(rng);
  s.color.init_random(rng);
  s.sem.init_random(rng);
  return s;
}

DecodeResult decode(const DecoderStack& stack, const Eigen::VectorXd& latent,
                    const Eigen::VectorXd& gamma, DecodeCache* cache) {
  if (latent.size() != stack.cfg.latent_dim || gamma.size() != stack.cfg.gamma_dim) {
    throw DimensionMismatchError("decode: latent/gamma size does not match stack config");
  }
  Eigen::VectorXd geom_in(latent.size() + gamma.size());
  geom_in << latent, gamma;
  const Eigen::VectorXd geom_out = stack.geom.forward(geom_in, cache ? &cache->geom : nullptr);

  DecodeResult r;
  r.sdf = geom_out[0];
  r.hidden = geom_out.tail(stack.cfg.hidden);

  Eigen::VectorXd head_in(stack.cfg.hidden + gamma.size());
  head_in << r.hidden, gamma;
  r.color = stack.color.forward(head_in, cache ? &cache->color : nullptr);
  r.logits = stack.sem.forward(head_in, cache ? &cache->sem : nullptr);

  if (cache) {
    cache->latent = latent;
    cache->gamma = gamma;
  }
  return r;
}

void decode_backward(const DecoderStack& stack, const DecodeCache& cache, double dsdf,
                     const Eigen::Vector3d& dcolor, const Eigen::VectorXd& dlogits,
                     DecodeGrads* grads, Eigen::VectorXd* dlatent, Eigen::VectorXd* dgamma) {
  const int H = stack.cfg.hidden;
  const int G = stack.cfg.gamma_dim;

  Eigen::VectorXd dhead_in = Eigen::VectorXd::Zero(H + G);
  if (dlogits.size() > 0) {
    dhead_in += stack.sem.backward(cache.sem, dlogits, grads ? &grads->sem : nullptr);
  }
  if (dcolor.squaredNorm() > 0.0) {
    dhead_in += stack.color.backward(cache.color, dcolor, grads ? &grads->color : nullptr);
  }

  Eigen::VectorXd dgeom_out = Eigen::VectorXd::Zero(1 + H);
  dgeom_out[0] = dsdf;
  dgeom_out.tail(H) = dhead_in.head(H);
  const Eigen::VectorXd dgeom_in =
      stack.geom.backward(cache.geom, dgeom_out, grads ? &grads->geom : nullptr);

  if (dlatent) *dlatent = dgeom_in.head(stack.cfg.latent_dim);
  if (dgamma) *dgamma = dgeom_in.tail(G) + dhead_in.tail(G);
}

DecodeGrads make_decode_grads(const DecoderStack& stack) {
  return DecodeGrads{stack.geom.make_grads(), stack.color.make_grads(), stack.sem.make_grads()};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

}  // namespace voxloop
