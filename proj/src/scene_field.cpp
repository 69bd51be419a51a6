#include "voxloop/scene_field.hpp"

#include <algorithm>
#include <cmath>

namespace voxloop {

namespace {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Bell-shaped rendering weight around the zero crossing: sig(s/tr)*sig(-s/tr).
double render_weight(double sdf, double tr, double* dw_ds) {
  const double a = sigmoid(sdf / tr);
  const double b = sigmoid(-sdf / tr);
  if (dw_ds) *dw_ds = a * b * (b - a) / tr;
  return a * b;
}

}  // namespace

SceneField::SceneField(const SceneFieldConfig& cfg)
    : cfg_(cfg),
      grid_(cfg.grid),
      stack_(DecoderStack::create(
          DecoderConfig{cfg.grid.code_dim * cfg.grid.levels, cfg.encoding.dim(), cfg.hidden,
                        cfg.classes},
          cfg.seed)) {}

void SceneField::query(const Eigen::Vector3d& x, Eigen::VectorXd* latent,
                       Eigen::VectorXd* gamma) const {
  if (!cfg_.encoding.contains(x)) throw OutOfBoundsError();
  if (latent) *latent = grid_.interpolate(x);
  if (gamma) *gamma = encode_position(cfg_.encoding, x);
}

DecodeResult SceneField::decode_at(const Eigen::Vector3d& x) const {
  return decode(stack_, grid_.interpolate(x), encode_position(cfg_.encoding, x));
}

double SceneField::sdf_at(const Eigen::Vector3d& x) const { return decode_at(x).sdf; }

Eigen::Vector3d SceneField::sdf_gradient(const Eigen::Vector3d& x) const {
  DecodeCache cache;
  decode(stack_, grid_.interpolate(x), encode_position(cfg_.encoding, x), &cache);
  Eigen::VectorXd dlatent, dgamma;
  decode_backward(stack_, cache, 1.0, Eigen::Vector3d::Zero(), Eigen::VectorXd(), nullptr,
                  &dlatent, &dgamma);

  Eigen::Vector3d dx = encode_position_jacobian(cfg_.encoding, x).transpose() * dgamma;
  const int F = cfg_.grid.code_dim;
  for (int l = 0; l < cfg_.grid.levels; ++l) {
    const CornerLookup corners = grid_.lookup(l, x);
    const auto seg = dlatent.segment(l * F, F);
    for (int c = 0; c < 8; ++c) {
      const int s = corners.slots[static_cast<size_t>(c)];
      if (s < 0) continue;
      dx += seg.dot(grid_.codes(l).col(s)) * corners.weight_grads[static_cast<size_t>(c)];
    }
  }
  return dx;
}

// --- batches -----------------------------------------------------------------

RayBatch build_ray_batch(const Frame& frame, const Pose& pose, int count,
                         const RaySamplingConfig& sampling, double truncation,
                         std::mt19937_64& rng, LatentGrid* training_grid) {
  std::vector<std::pair<int, int>> valid;
  valid.reserve(static_cast<size_t>(frame.intr.width) * static_cast<size_t>(frame.intr.height) /
                4);
  for (int v = 0; v < frame.intr.height; ++v) {
    for (int u = 0; u < frame.intr.width; ++u) {
      if (frame.valid_depth(u, v)) valid.emplace_back(u, v);
    }
  }

  RayBatch batch;
  batch.poses.push_back(pose);
  batch.frame_ids.push_back(frame.id);
  if (valid.empty()) return batch;

  std::vector<std::pair<int, int>> chosen;
  chosen.reserve(static_cast<size_t>(count));
  std::sample(valid.begin(), valid.end(), std::back_inserter(chosen),
              static_cast<size_t>(count), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& [u, v] : chosen) {
    Ray ray;
    ray.pose_index = 0;
    ray.dir_cam = frame.ray_dir(u, v);
    ray.depth = frame.depth_at(u, v);
    ray.rgb = frame.color_at(u, v);
    ray.label = frame.label_at(u, v);

    const double lo_near = std::max(sampling.near_clip, ray.depth - truncation);
    const double hi_near = ray.depth + truncation;
    if (hi_near <= lo_near) continue;
    for (int i = 0; i < sampling.near_samples; ++i) {
      ray.zs.push_back(lo_near + (hi_near - lo_near) * unit(rng));
    }
    const double hi_free = ray.depth - truncation;
    if (hi_free > sampling.near_clip) {
      for (int i = 0; i < sampling.free_samples; ++i) {
        ray.zs.push_back(sampling.near_clip + (hi_free - sampling.near_clip) * unit(rng));
      }
    }
    std::sort(ray.zs.begin(), ray.zs.end());

    if (training_grid) {
      const auto& cfg = training_grid->config();
      for (double z : ray.zs) {
        const double band = std::abs(z - ray.depth);
        if (band > truncation) continue;
        const Eigen::Vector3d x = pose * (z * ray.dir_cam);
        for (int l = 0; l < cfg.levels; ++l) {
          // Fine levels only keep a tight band around the surface to bound
          // hash load; the coarse level covers the full truncation band.
          const double level_band =
              (l == 0) ? truncation : 2.0 * cfg.voxel_sizes[static_cast<size_t>(l)];
          if (band > level_band) continue;
          const double voxel = cfg.voxel_sizes[static_cast<size_t>(l)];
          const VertexKey base{static_cast<int32_t>(std::floor(x.x() / voxel)),
                               static_cast<int32_t>(std::floor(x.y() / voxel)),
                               static_cast<int32_t>(std::floor(x.z() / voxel))};
          for (int c = 0; c < 8; ++c) {
            training_grid->allocate(
                l, VertexKey{base.ix + (c & 1), base.iy + ((c >> 1) & 1),
                             base.iz + ((c >> 2) & 1)});
          }
        }
      }
    }
    batch.rays.push_back(std::move(ray));
  }
  return batch;
}

RayBatch merge_batches(const std::vector<RayBatch>& batches) {
  RayBatch out;
  for (const auto& b : batches) {
    const int base = static_cast<int>(out.poses.size());
    out.poses.insert(out.poses.end(), b.poses.begin(), b.poses.end());
    out.frame_ids.insert(out.frame_ids.end(), b.frame_ids.begin(), b.frame_ids.end());
    for (Ray ray : b.rays) {
      ray.pose_index += base;
      out.rays.push_back(std::move(ray));
    }
  }
  return out;
}

// --- gradients ---------------------------------------------------------------

FieldGradients FieldGradients::make(const SceneField& field) {
  FieldGradients g;
  const auto& cfg = field.config().grid;
  for (int l = 0; l < cfg.levels; ++l) {
    g.code_grads.push_back(Eigen::MatrixXd::Zero(cfg.code_dim, cfg.hash_capacity));
    g.touched.emplace_back();
    g.dirty.emplace_back(static_cast<size_t>(cfg.hash_capacity), 0);
  }
  g.decoder = make_decode_grads(field.stack());
  return g;
}

void FieldGradients::add_code_grad(int level, int slot,
                                   const Eigen::Ref<const Eigen::VectorXd>& g) {
  code_grads[static_cast<size_t>(level)].col(slot) += g;
  auto& d = dirty[static_cast<size_t>(level)][static_cast<size_t>(slot)];
  if (!d) {
    d = 1;
    touched[static_cast<size_t>(level)].push_back(slot);
  }
}

void FieldGradients::clear(const SceneField& field) {
  for (size_t l = 0; l < code_grads.size(); ++l) {
    for (int slot : touched[l]) {
      code_grads[l].col(slot).setZero();
      dirty[l][static_cast<size_t>(slot)] = 0;
    }
    touched[l].clear();
  }
  decoder = make_decode_grads(field.stack());
}

double cross_entropy(const Eigen::VectorXd& onehot, const Eigen::VectorXd& probs) {
  double ce = 0.0;
  for (Eigen::Index i = 0; i < onehot.size(); ++i) {
    if (onehot[i] != 0.0) ce -= onehot[i] * std::log(std::max(probs[i], 1e-300));
  }
  return ce;
}

// --- total loss ---------------------------------------------------------------

LossBreakdown total_loss(const RayBatch& batch, const SceneField& field, const LossWeights& w,
                         FieldGradients* grads, PoseGradients* pose_grads) {
  if (batch.empty()) throw EmptyBatchError();
  const auto& cfg = field.config();
  const double tr = cfg.truncation;
  const int F = cfg.grid.code_dim;
  const int L = cfg.grid.levels;
  const int C = cfg.classes;

  if (pose_grads) pose_grads->assign(batch.poses.size(), Eigen::Matrix<double, 6, 1>::Zero());

  // Normalizers are batch-shape constants so the loss stays smooth in the
  // parameters: ray losses average over all rays, sample losses over their
  // sample counts.
  if (L > 4) throw std::invalid_argument("total_loss: at most 4 grid levels supported");
  const int n_rays = static_cast<int>(batch.rays.size());
  int n_near = 0, n_free = 0;
  for (const auto& ray : batch.rays) {
    for (double z : ray.zs) {
      if (std::abs(z - ray.depth) <= tr) ++n_near;
      else if (z < ray.depth) ++n_free;
    }
  }

  LossBreakdown out;
  out.near_samples = n_near;
  out.free_samples = n_free;

  struct SampleFwd {
    DecodeCache cache;
    DecodeResult result;
    Eigen::Vector3d x;
    double weight = 0.0, dw_ds = 0.0;
    CornerLookup corners[4];  // indexed by level, small fixed bound
  };
  std::vector<SampleFwd> fwd;

  for (const auto& ray : batch.rays) {
    const Pose& pose = batch.poses[static_cast<size_t>(ray.pose_index)];
    const size_t n = ray.zs.size();
    if (n == 0) continue;
    fwd.resize(std::max(fwd.size(), n));

    double weight_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      SampleFwd& s = fwd[i];
      s.x = pose * (ray.zs[i] * ray.dir_cam);
      Eigen::VectorXd latent = Eigen::VectorXd::Zero(F * L);
      for (int l = 0; l < L; ++l) {
        s.corners[l] = field.grid().lookup(l, s.x);
        auto seg = latent.segment(l * F, F);
        for (int c = 0; c < 8; ++c) {
          const int slot = s.corners[l].slots[static_cast<size_t>(c)];
          if (slot >= 0)
            seg += s.corners[l].weights[static_cast<size_t>(c)] * field.grid().codes(l).col(slot);
        }
      }
      const Eigen::VectorXd gamma = encode_position(cfg.encoding, s.x);
      s.result = decode(field.stack(), latent, gamma, &s.cache);
      s.weight = render_weight(s.result.sdf, tr, &s.dw_ds);
      weight_sum += s.weight;
    }

    const bool rendered = weight_sum > 1e-8;
    Eigen::Vector3d rendered_rgb = Eigen::Vector3d::Zero();
    double rendered_depth = 0.0;
    Eigen::VectorXd rendered_logits = Eigen::VectorXd::Zero(C);
    Eigen::VectorXd probs;
    if (rendered) {
      ++out.rendered_rays;
      for (size_t i = 0; i < n; ++i) {
        const double wn = fwd[i].weight / weight_sum;
        rendered_rgb += wn * fwd[i].result.color;
        rendered_depth += wn * ray.zs[i];
        rendered_logits += wn * fwd[i].result.logits;
      }
      probs = softmax(rendered_logits);
      out.rgb += (rendered_rgb - ray.rgb).squaredNorm() / 3.0 / n_rays;
      out.depth += (rendered_depth - ray.depth) * (rendered_depth - ray.depth) / n_rays;
      Eigen::VectorXd onehot = Eigen::VectorXd::Zero(C);
      onehot[ray.label] = 1.0;
      out.sem += cross_entropy(onehot, probs) / n_rays;
    }

    // Upstream gradients of the weighted total w.r.t. rendered quantities.
    Eigen::Vector3d d_rgb = Eigen::Vector3d::Zero();
    double d_depth = 0.0;
    Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(C);
    if (rendered && (grads || pose_grads)) {
      d_rgb = w.rgb * 2.0 / 3.0 / n_rays * (rendered_rgb - ray.rgb);
      d_depth = w.depth * 2.0 / n_rays * (rendered_depth - ray.depth);
      d_logits = w.sem / n_rays * probs;
      d_logits[ray.label] -= w.sem / n_rays;
    }

    // dTotal/d(normalized weight_i), then through the normalization.
    double g_dot_wn = 0.0;
    std::vector<double> g_wn(n, 0.0);
    if (rendered && (grads || pose_grads)) {
      for (size_t i = 0; i < n; ++i) {
        g_wn[i] = d_depth * ray.zs[i] + d_rgb.dot(fwd[i].result.color) +
                  d_logits.dot(fwd[i].result.logits);
        g_dot_wn += g_wn[i] * fwd[i].weight / weight_sum;
      }
    }

    for (size_t i = 0; i < n; ++i) {
      SampleFwd& s = fwd[i];
      const double z = ray.zs[i];
      const bool near = std::abs(z - ray.depth) <= tr;
      const bool free_space = !near && z < ray.depth;

      double d_sdf = 0.0;
      if (near) {
        const double target = ray.depth - z;
        out.sdf += (s.result.sdf - target) * (s.result.sdf - target) / n_near;
        d_sdf += w.sdf * 2.0 / n_near * (s.result.sdf - target);
      } else if (free_space) {
        out.fs += (s.result.sdf - tr) * (s.result.sdf - tr) / n_free;
        d_sdf += w.fs * 2.0 / n_free * (s.result.sdf - tr);
      }

      if (!grads && !pose_grads) continue;

      Eigen::Vector3d d_color_i = Eigen::Vector3d::Zero();
      Eigen::VectorXd d_logits_i;
      if (rendered) {
        const double wn = s.weight / weight_sum;
        d_sdf += (g_wn[i] - g_dot_wn) / weight_sum * s.dw_ds;
        d_color_i = wn * d_rgb;
        d_logits_i = wn * d_logits;
      }

      Eigen::VectorXd dlatent, dgamma;
      decode_backward(field.stack(), s.cache, d_sdf, d_color_i, d_logits_i,
                      grads ? &grads->decoder : nullptr, &dlatent, &dgamma);

      if (grads) {
        for (int l = 0; l < L; ++l) {
          const auto seg = dlatent.segment(l * F, F);
          for (int c = 0; c < 8; ++c) {
            const int slot = s.corners[l].slots[static_cast<size_t>(c)];
            if (slot >= 0)
              grads->add_code_grad(l, slot, s.corners[l].weights[static_cast<size_t>(c)] * seg);
          }
        }
      }

      if (pose_grads) {
        Eigen::Vector3d dx =
            encode_position_jacobian(cfg.encoding, s.x).transpose() * dgamma;
        for (int l = 0; l < L; ++l) {
          const auto seg = dlatent.segment(l * F, F);
          for (int c = 0; c < 8; ++c) {
            const int slot = s.corners[l].slots[static_cast<size_t>(c)];
            if (slot >= 0) {
              dx += seg.dot(field.grid().codes(l).col(slot)) *
                    s.corners[l].weight_grads[static_cast<size_t>(c)];
            }
          }
        }
        auto& pg = (*pose_grads)[static_cast<size_t>(ray.pose_index)];
        pg.head<3>() += s.x.cross(dx);
        pg.tail<3>() += dx;
      }
    }
  }

  // Smoothness: squared difference of codes at adjacent allocated vertices.
  const auto pairs = field.grid().adjacent_pairs();
  if (!pairs.empty()) {
    const double norm = static_cast<double>(pairs.size()) * F;
    for (const auto& [l, a, b] : pairs) {
      const Eigen::VectorXd diff = field.grid().codes(l).col(a) - field.grid().codes(l).col(b);
      out.smooth += diff.squaredNorm() / norm;
      if (grads) {
        const Eigen::VectorXd g = w.smooth * 2.0 / norm * diff;
        grads->add_code_grad(l, a, g);
        grads->add_code_grad(l, b, -g);
      }
    }
  }

  out.total = w.rgb * out.rgb + w.depth * out.depth + w.sdf * out.sdf + w.fs * out.fs +
              w.sem * out.sem + w.smooth * out.smooth;
  return out;
}

// --- optimizer ----------------------------------------------------------------

MapOptimizer::MapOptimizer(const SceneField& field, const OptimizerConfig& cfg)
    : cfg_(cfg), grads_(FieldGradients::make(field)) {
  const auto& gc = field.config().grid;
  for (int l = 0; l < gc.levels; ++l) {
    code_momentum_.push_back(Eigen::MatrixXd::Zero(gc.code_dim, gc.hash_capacity));
  }
  decoder_momentum_ = make_decode_grads(field.stack());
}

void MapOptimizer::apply(SceneField& field) {
  for (size_t l = 0; l < code_momentum_.size(); ++l) {
    auto& codes = field.grid().codes(static_cast<int>(l));
    for (int slot : grads_.touched[l]) {
      auto m = code_momentum_[l].col(slot);
      m = cfg_.momentum * m + grads_.code_grads[l].col(slot);
      codes.col(slot) -= cfg_.lr_codes * m;
    }
  }
  auto update_mlp = [&](Mlp& net, MlpGrads& g, MlpGrads& mom, double lr) {
    for (size_t i = 0; i < net.layers().size(); ++i) {
      mom.dw[i] = cfg_.momentum * mom.dw[i] + g.dw[i];
      mom.db[i] = cfg_.momentum * mom.db[i] + g.db[i];
      net.layers()[i].w -= lr * mom.dw[i];
      net.layers()[i].b -= lr * mom.db[i];
    }
  };
  update_mlp(field.stack().geom, grads_.decoder.geom, decoder_momentum_.geom, cfg_.lr_decoder);
  update_mlp(field.stack().color, grads_.decoder.color, decoder_momentum_.color,
             cfg_.lr_decoder);
  update_mlp(field.stack().sem, grads_.decoder.sem, decoder_momentum_.sem, cfg_.lr_sem);
}

LossBreakdown MapOptimizer::step(SceneField& field, const RayBatch& batch,
                                 const LossWeights& weights) {
  grads_.clear(field);
  const LossBreakdown loss = total_loss(batch, field, weights, &grads_, nullptr);
  apply(field);
  return loss;
}

LossBreakdown MapOptimizer::step_with_poses(SceneField& field, RayBatch& batch,
                                            const LossWeights& weights, double pose_lr,
                                            const std::vector<bool>& pose_free) {
  grads_.clear(field);
  PoseGradients pg;
  const LossBreakdown loss = total_loss(batch, field, weights, &grads_, &pg);
  apply(field);
  for (size_t i = 0; i < batch.poses.size(); ++i) {
    if (i < pose_free.size() && !pose_free[i]) continue;
    const Eigen::Matrix<double, 6, 1> step = -pose_lr * pg[i];
    batch.poses[i] = compose(exp_map(Twist::from_vector(step)), batch.poses[i]);
  }
  return loss;
}

LossBreakdown optimize_map(SceneField& field, MapOptimizer& opt,
                           const std::vector<const Frame*>& frames, int iters,
                           const LossWeights& weights, std::mt19937_64& rng) {
  LossBreakdown last;
  if (frames.empty() || iters <= 0) return last;
  const auto& cfg = opt.config();
  for (int it = 0; it < iters; ++it) {
    std::vector<RayBatch> parts;
    const int current = static_cast<int>(std::ceil(cfg.batch_rays * 0.6));
    parts.push_back(build_ray_batch(*frames.back(), frames.back()->pose, current, cfg.sampling,
                                    field.config().truncation, rng, &field.grid()));
    if (frames.size() > 1) {
      const int others = std::min<int>(3, static_cast<int>(frames.size()) - 1);
      const int per = (cfg.batch_rays - current) / others;
      std::uniform_int_distribution<size_t> pick(0, frames.size() - 2);
      for (int k = 0; k < others; ++k) {
        const Frame* f = frames[pick(rng)];
        parts.push_back(build_ray_batch(*f, f->pose, per, cfg.sampling,
                                        field.config().truncation, rng, &field.grid()));
      }
    }
    const RayBatch batch = merge_batches(parts);
    if (batch.empty()) continue;
    last = opt.step(field, batch, weights);
  }
  return last;
}

// --- extraction ----------------------------------------------------------------

PointCloud extract_cloud_from_field(const std::function<double(const Eigen::Vector3d&)>& sdf,
                                    const std::function<int(const Eigen::Vector3d&)>& label,
                                    const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                                    double step, double truncation) {
  if (step <= 0.0) throw std::invalid_argument("extract_cloud: step must be positive");
  const int nx = static_cast<int>(std::floor((hi.x() - lo.x()) / step)) + 1;
  const int ny = static_cast<int>(std::floor((hi.y() - lo.y()) / step)) + 1;
  const int nz = static_cast<int>(std::floor((hi.z() - lo.z()) / step)) + 1;

  auto at = [&](int i, int j, int k) -> Eigen::Vector3d {
    return lo + step * Eigen::Vector3d(i, j, k);
  };
  std::vector<double> values(static_cast<size_t>(nx) * ny * nz);
  auto idx = [&](int i, int j, int k) {
    return (static_cast<size_t>(k) * ny + j) * nx + i;
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) values[idx(i, j, k)] = sdf(at(i, j, k));

  PointCloud cloud;
  const int dirs[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double s0 = values[idx(i, j, k)];
        for (const auto& d : dirs) {
          const int i1 = i + d[0], j1 = j + d[1], k1 = k + d[2];
          if (i1 >= nx || j1 >= ny || k1 >= nz) continue;
          const double s1 = values[idx(i1, j1, k1)];
          if (s0 * s1 >= 0.0) continue;
          if (std::abs(s0) > truncation || std::abs(s1) > truncation) continue;
          const double t = s0 / (s0 - s1);
          const Eigen::Vector3d p = at(i, j, k) + t * step * Eigen::Vector3d(d[0], d[1], d[2]);

          const double h = 0.5 * step;
          Eigen::Vector3d n(sdf(p + Eigen::Vector3d(h, 0, 0)) - sdf(p - Eigen::Vector3d(h, 0, 0)),
                            sdf(p + Eigen::Vector3d(0, h, 0)) - sdf(p - Eigen::Vector3d(0, h, 0)),
                            sdf(p + Eigen::Vector3d(0, 0, h)) - sdf(p - Eigen::Vector3d(0, 0, h)));
          const double len = n.norm();
          if (len < 1e-12) continue;
          cloud.points.push_back(p);
          cloud.normals.push_back(n / len);
          cloud.labels.push_back(label(p));
        }
      }
    }
  }
  return cloud;
}

PointCloud extract_cloud(const SceneField& field, const Eigen::Vector3d& lo,
                         const Eigen::Vector3d& hi, double step) {
  // Restrict to observed space: the finest level is only allocated in a tight
  // band around supervised surfaces.
  const int fine = field.config().grid.levels - 1;
  auto observed = [&](const Eigen::Vector3d& x) {
    const CornerLookup corners = field.grid().lookup(fine, x);
    for (int c = 0; c < 8; ++c) {
      if (corners.slots[static_cast<size_t>(c)] >= 0) return true;
    }
    return false;
  };
  auto sdf = [&](const Eigen::Vector3d& x) {
    if (!observed(x)) return field.config().truncation;
    return field.sdf_at(x);
  };
  auto label = [&](const Eigen::Vector3d& x) {
    const DecodeResult r = field.decode_at(x);
    Eigen::Index best;
    r.logits.maxCoeff(&best);
    return static_cast<int>(best);
  };
  return extract_cloud_from_field(sdf, label, lo, hi, step, 0.9 * field.config().truncation);
}

}  // namespace voxloop
