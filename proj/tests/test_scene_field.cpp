#include <doctest.h>

#include <random>

#include "voxloop/scene_field.hpp"

using namespace voxloop;

namespace {

SceneFieldConfig small_config() {
  SceneFieldConfig cfg;
  cfg.grid.levels = 2;
  cfg.grid.code_dim = 4;
  cfg.grid.voxel_sizes = {0.2, 0.1};
  cfg.grid.hash_capacity = 2048;
  cfg.encoding.bins_per_axis = 6;
  cfg.encoding.bounds_min = Eigen::Vector3d(-4, -4, -4);
  cfg.encoding.bounds_max = Eigen::Vector3d(4, 4, 4);
  cfg.hidden = 8;
  cfg.classes = 3;
  cfg.truncation = 0.3;
  cfg.seed = 99;
  return cfg;
}

// A tiny frame seeing a plane at z = depth with banded labels and colors.
Frame plane_frame(int w, int h, double depth) {
  Frame f;
  f.id = 0;
  f.intr = Intrinsics{w, h, 0.8 * w, 0.8 * w, w / 2.0, h / 2.0};
  f.color.resize(static_cast<size_t>(3 * w * h));
  f.depth.resize(static_cast<size_t>(w * h));
  f.semantics.resize(static_cast<size_t>(w * h));
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const size_t i = f.pixel_index(u, v);
      // camera looks along +z; plane z=depth intersects each ray at z=depth
      f.depth[i] = depth;
      f.semantics[i] = static_cast<uint8_t>((3 * v / h) % 3);
      f.color[3 * i] = static_cast<uint8_t>(40 * (u % 5));
      f.color[3 * i + 1] = static_cast<uint8_t>(30 * (v % 7));
      f.color[3 * i + 2] = 128;
    }
  }
  return f;
}

struct ParamRef {
  double* value;
  const double* grad;
};

std::vector<ParamRef> collect_params(SceneField& field, FieldGradients& grads) {
  std::vector<ParamRef> out;
  const auto& cfg = field.config().grid;
  for (int l = 0; l < cfg.levels; ++l) {
    auto& codes = field.grid().codes(l);
    const auto& g = grads.code_grads[static_cast<size_t>(l)];
    for (int s = 0; s < cfg.hash_capacity; ++s) {
      if (!field.grid().slot_used(l, s)) continue;
      for (int r = 0; r < cfg.code_dim; ++r) {
        out.push_back({&codes(r, s), &g(r, s)});
      }
    }
  }
  auto add_mlp = [&](Mlp& net, MlpGrads& g) {
    for (size_t i = 0; i < net.layers().size(); ++i) {
      auto& layer = net.layers()[i];
      for (Eigen::Index k = 0; k < layer.w.size(); ++k)
        out.push_back({layer.w.data() + k, g.dw[i].data() + k});
      for (Eigen::Index k = 0; k < layer.b.size(); ++k)
        out.push_back({layer.b.data() + k, g.db[i].data() + k});
    }
  };
  add_mlp(field.stack().geom, grads.decoder.geom);
  add_mlp(field.stack().color, grads.decoder.color);
  add_mlp(field.stack().sem, grads.decoder.sem);
  return out;
}

}  // namespace

TEST_CASE("latent query at a vertex returns that vertex's code") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  const int level = 1;
  const double voxel = cfg.grid.voxel_sizes[1];
  const VertexKey key{4, 2, 6};
  const int slot = field.grid().allocate(level, key);
  Eigen::VectorXd code(cfg.grid.code_dim);
  code << 1.0, -2.0, 0.5, 3.0;
  field.grid().codes(level).col(slot) = code;

  const Eigen::Vector3d x(4 * voxel, 2 * voxel, 6 * voxel);
  Eigen::VectorXd latent, gamma;
  field.query(x, &latent, &gamma);
  CHECK((latent.segment(level * cfg.grid.code_dim, cfg.grid.code_dim) - code).norm() < 1e-12);
  CHECK(latent.head(cfg.grid.code_dim).norm() == doctest::Approx(0.0));  // level 0 unallocated
  CHECK(gamma.size() == cfg.encoding.dim());
  CHECK((gamma.array() >= 0.0).all());
  CHECK((gamma.array() <= 1.0).all());
}

TEST_CASE("constant codes over a voxel interpolate to the same code") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  Eigen::VectorXd code(cfg.grid.code_dim);
  code << 0.3, 0.1, -0.7, 2.0;
  const double voxel = cfg.grid.voxel_sizes[0];
  for (int c = 0; c < 8; ++c) {
    const int slot =
        field.grid().allocate(0, VertexKey{(c & 1), ((c >> 1) & 1), ((c >> 2) & 1)});
    field.grid().codes(0).col(slot) = code;
  }
  const Eigen::Vector3d center(0.5 * voxel, 0.5 * voxel, 0.5 * voxel);
  const Eigen::VectorXd latent = field.grid().interpolate(center);
  CHECK((latent.head(cfg.grid.code_dim) - code).norm() < 1e-12);
}

TEST_CASE("quarter-way interpolation between two vertices is 0.75a + 0.25b") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  const double voxel = cfg.grid.voxel_sizes[0];
  Eigen::VectorXd a(cfg.grid.code_dim), b(cfg.grid.code_dim);
  a << 1, 2, 3, 4;
  b << -4, 0, 2, 8;
  field.grid().codes(0).col(field.grid().allocate(0, VertexKey{0, 0, 0})) = a;
  field.grid().codes(0).col(field.grid().allocate(0, VertexKey{1, 0, 0})) = b;
  const Eigen::Vector3d x(0.25 * voxel, 0.0, 0.0);
  const Eigen::VectorXd latent = field.grid().interpolate(x);
  CHECK((latent.head(cfg.grid.code_dim) - (0.75 * a + 0.25 * b)).norm() < 1e-12);
}

TEST_CASE("trilinear weights are nonnegative and sum to 1") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d x(dist(rng), dist(rng), dist(rng));
    for (int l = 0; l < cfg.grid.levels; ++l) {
      const CornerLookup corners = field.grid().lookup(l, x);
      double sum = 0;
      for (int c = 0; c < 8; ++c) {
        CHECK(corners.weights[static_cast<size_t>(c)] >= -1e-15);
        sum += corners.weights[static_cast<size_t>(c)];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("query outside bounds throws") {
  SceneField field(small_config());
  Eigen::VectorXd latent, gamma;
  CHECK_THROWS_AS(field.query(Eigen::Vector3d(100, 0, 0), &latent, &gamma), OutOfBoundsError);
}

TEST_CASE("decode with zeroed weights returns the sdf bias") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  for (auto& layer : field.stack().geom.layers()) layer.w.setZero();
  field.stack().geom.layers().back().b[0] = 1.25;
  const DecodeResult r = field.decode_at(Eigen::Vector3d(0.1, 0.2, 0.3));
  CHECK(r.sdf == doctest::Approx(1.25));
}

TEST_CASE("softmax of logits is a probability vector") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd logits(5);
    for (int k = 0; k < 5; ++k) logits[k] = dist(rng);
    const Eigen::VectorXd p = softmax(logits);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((p.array() >= 0.0).all());
  }
}

TEST_CASE("decode color stays in [0,1]") {
  SceneField field(small_config());
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const DecodeResult r = field.decode_at(Eigen::Vector3d(dist(rng), dist(rng), dist(rng)));
    CHECK((r.color.array() >= 0.0).all());
    CHECK((r.color.array() <= 1.0).all());
  }
}

TEST_CASE("cross entropy of an even two-class split is -log 0.5") {
  Eigen::VectorXd onehot(2), probs(2);
  onehot << 1, 0;
  probs << 0.5, 0.5;
  CHECK(cross_entropy(onehot, probs) == doctest::Approx(0.6931471805599453).epsilon(1e-9));
}

TEST_CASE("decode rejects mismatched dimensions") {
  SceneField field(small_config());
  Eigen::VectorXd latent = Eigen::VectorXd::Zero(3);  // wrong
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(field.config().encoding.dim());
  CHECK_THROWS_AS(decode(field.stack(), latent, gamma), DimensionMismatchError);
}

TEST_CASE("analytic gradients match central finite differences") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  const Frame frame = plane_frame(16, 12, 1.5);

  std::mt19937_64 rng(42);
  RayBatch batch = build_ray_batch(frame, Pose::identity(), 24, RaySamplingConfig{4, 2, 0.1},
                                   cfg.truncation, rng, &field.grid());
  REQUIRE(!batch.empty());

  // non-trivial codes so every path carries signal
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  for (int l = 0; l < cfg.grid.levels; ++l) {
    for (int s = 0; s < cfg.grid.hash_capacity; ++s) {
      if (!field.grid().slot_used(l, s)) continue;
      for (int r = 0; r < cfg.grid.code_dim; ++r) field.grid().codes(l)(r, s) = dist(rng);
    }
  }

  LossWeights w;
  w.rgb = 5.0;
  w.depth = 1.0;
  w.sdf = 200.0;
  w.fs = 2.0;
  w.sem = 10.0;
  w.smooth = 0.01;

  FieldGradients grads = FieldGradients::make(field);
  total_loss(batch, field, w, &grads, nullptr);
  std::vector<ParamRef> params = collect_params(field, grads);
  REQUIRE(params.size() > 200);

  std::uniform_int_distribution<size_t> pick(0, params.size() - 1);
  double max_rel = 0.0;
  int checked = 0;
  while (checked < 120) {
    ParamRef p = params[pick(rng)];
    const double h = 1e-4 * std::max(1.0, std::abs(*p.value));
    const double saved = *p.value;
    *p.value = saved + h;
    const double lp = total_loss(batch, field, w, nullptr, nullptr).total;
    *p.value = saved - h;
    const double lm = total_loss(batch, field, w, nullptr, nullptr).total;
    *p.value = saved;
    const double fd = (lp - lm) / (2 * h);
    const double rel = std::abs(*p.grad - fd) / std::max({std::abs(*p.grad), std::abs(fd), 1e-7});
    max_rel = std::max(max_rel, rel);
    ++checked;
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("pose gradients match finite differences") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  const Frame frame = plane_frame(16, 12, 1.5);
  std::mt19937_64 rng(43);
  RayBatch batch = build_ray_batch(frame, Pose::identity(), 16, RaySamplingConfig{4, 2, 0.1},
                                   cfg.truncation, rng, &field.grid());
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  for (int l = 0; l < cfg.grid.levels; ++l) {
    for (int s = 0; s < cfg.grid.hash_capacity; ++s) {
      if (!field.grid().slot_used(l, s)) continue;
      for (int r = 0; r < cfg.grid.code_dim; ++r) field.grid().codes(l)(r, s) = dist(rng);
    }
  }

  LossWeights w;
  PoseGradients pg;
  total_loss(batch, field, w, nullptr, &pg);
  REQUIRE(pg.size() == 1);

  const Pose base = batch.poses[0];
  for (int k = 0; k < 6; ++k) {
    const double h = 1e-6;
    Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
    delta[k] = h;
    batch.poses[0] = compose(exp_map(Twist::from_vector(delta)), base);
    const double lp = total_loss(batch, field, w, nullptr, nullptr).total;
    delta[k] = -h;
    batch.poses[0] = compose(exp_map(Twist::from_vector(delta)), base);
    const double lm = total_loss(batch, field, w, nullptr, nullptr).total;
    batch.poses[0] = base;
    const double fd = (lp - lm) / (2 * h);
    CHECK(pg[0][k] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("sdf_gradient matches finite differences of sdf_at") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  // allocate and randomize a block of grid
  for (double x = -0.4; x <= 0.4; x += 0.1)
    for (double y = -0.4; y <= 0.4; y += 0.1)
      for (double z = -0.4; z <= 0.4; z += 0.1)
        field.grid().allocate_around(Eigen::Vector3d(x, y, z));
  for (int l = 0; l < cfg.grid.levels; ++l)
    for (int s = 0; s < cfg.grid.hash_capacity; ++s)
      if (field.grid().slot_used(l, s))
        for (int r = 0; r < cfg.grid.code_dim; ++r) field.grid().codes(l)(r, s) = dist(rng);

  for (int i = 0; i < 10; ++i) {
    // keep away from voxel faces where the interpolation gradient jumps
    const Eigen::Vector3d x(0.05 * 0.3 + dist(rng) * 0.04, dist(rng) * 0.04, dist(rng) * 0.04);
    const Eigen::Vector3d g = field.sdf_gradient(x);
    for (int a = 0; a < 3; ++a) {
      const double h = 1e-6;
      Eigen::Vector3d xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const double fd = (field.sdf_at(xp) - field.sdf_at(xm)) / (2 * h);
      CHECK(g[a] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("total_loss on empty batch throws") {
  SceneField field(small_config());
  RayBatch batch;
  CHECK_THROWS_AS(total_loss(batch, field, LossWeights{}, nullptr, nullptr), EmptyBatchError);
}

TEST_CASE("extract_cloud_from_field recovers an analytic sphere") {
  const double radius = 0.8;
  auto sphere = [&](const Eigen::Vector3d& x) { return x.norm() - radius; };
  auto label = [](const Eigen::Vector3d&) { return 2; };
  const double step = 0.1;
  const PointCloud cloud =
      extract_cloud_from_field(sphere, label, Eigen::Vector3d(-1.2, -1.2, -1.2),
                               Eigen::Vector3d(1.2, 1.2, 1.2), step, 0.5);
  REQUIRE(cloud.size() > 100);
  for (const auto& p : cloud.points) {
    CHECK(std::abs(p.norm() - radius) < step / 2);
  }
  for (int l : cloud.labels) CHECK(l == 2);
  // normals point along the radial direction
  for (size_t i = 0; i < cloud.size(); i += 17) {
    CHECK(cloud.normals[i].dot(cloud.points[i].normalized()) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("extract_cloud_from_field of an all-truncation field is empty") {
  auto flat = [](const Eigen::Vector3d&) { return 0.3; };
  auto label = [](const Eigen::Vector3d&) { return 0; };
  const PointCloud cloud = extract_cloud_from_field(
      flat, label, Eigen::Vector3d(-1, -1, -1), Eigen::Vector3d(1, 1, 1), 0.2, 0.3);
  CHECK(cloud.empty());
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  const Frame frame = plane_frame(16, 12, 1.5);
  std::mt19937_64 rng(45);
  build_ray_batch(frame, Pose::identity(), 64, RaySamplingConfig{4, 2, 0.1}, cfg.truncation, rng,
                  &field.grid());
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int l = 0; l < cfg.grid.levels; ++l)
    for (int s = 0; s < cfg.grid.hash_capacity; ++s)
      if (field.grid().slot_used(l, s))
        for (int r = 0; r < cfg.grid.code_dim; ++r) field.grid().codes(l)(r, s) = dist(rng);

  const std::string p1 = "/tmp/voxloop_ckpt1.bin", p2 = "/tmp/voxloop_ckpt2.bin";
  save_checkpoint(p1, field);
  SceneField loaded = load_checkpoint(p1);
  save_checkpoint(p2, loaded);

  auto slurp = [](const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string data;
    char buf[4096];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) data.append(buf, got);
    std::fclose(f);
    return data;
  };
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.grid().total_allocated() == field.grid().total_allocated());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("two identical training runs produce bit-identical parameters") {
  auto run = [](uint64_t seed) {
    SceneFieldConfig cfg = small_config();
    cfg.seed = seed;
    SceneField field(cfg);
    Frame frame = plane_frame(24, 18, 1.5);
    frame.pose = Pose::identity();
    OptimizerConfig ocfg;
    ocfg.batch_rays = 64;
    ocfg.sampling = RaySamplingConfig{4, 2, 0.1};
    MapOptimizer opt(field, ocfg);
    std::mt19937_64 rng(seed);
    optimize_map(field, opt, {&frame}, 20, LossWeights{}, rng);
    return field;
  };
  SceneField a = run(7), b = run(7);
  for (int l = 0; l < a.config().grid.levels; ++l) {
    CHECK(a.grid().codes(l) == b.grid().codes(l));
  }
  for (size_t i = 0; i < a.stack().geom.layers().size(); ++i) {
    CHECK(a.stack().geom.layers()[i].w == b.stack().geom.layers()[i].w);
  }
  for (size_t i = 0; i < a.stack().sem.layers().size(); ++i) {
    CHECK(a.stack().sem.layers()[i].w == b.stack().sem.layers()[i].w);
  }
}

TEST_CASE("optimize_map with zero iterations leaves everything bit-identical") {
  SceneFieldConfig cfg = small_config();
  SceneField field(cfg);
  Frame frame = plane_frame(16, 12, 1.5);
  const Eigen::MatrixXd codes_before = field.grid().codes(0);
  const Eigen::MatrixXd w_before = field.stack().geom.layers()[0].w;
  OptimizerConfig ocfg;
  MapOptimizer opt(field, ocfg);
  std::mt19937_64 rng(1);
  optimize_map(field, opt, {&frame}, 0, LossWeights{}, rng);
  CHECK(field.grid().codes(0) == codes_before);
  CHECK(field.stack().geom.layers()[0].w == w_before);
}
