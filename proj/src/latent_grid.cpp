#include "voxloop/latent_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace voxloop {

namespace {
// Primes from the standard spatial-hashing construction.
constexpr uint64_t kP1 = 73856093ULL;
constexpr uint64_t kP2 = 19349663ULL;
constexpr uint64_t kP3 = 83492791ULL;
}  // namespace

LatentGrid::LatentGrid(const LatentGridConfig& cfg) : cfg_(cfg) {
  if (static_cast<int>(cfg.voxel_sizes.size()) != cfg.levels) {
    throw std::invalid_argument("LatentGrid: voxel_sizes must have one entry per level");
  }
  levels_.resize(static_cast<size_t>(cfg.levels));
  for (int l = 0; l < cfg.levels; ++l) {
    Level& lv = levels_[static_cast<size_t>(l)];
    lv.voxel = cfg.voxel_sizes[static_cast<size_t>(l)];
    lv.keys.resize(static_cast<size_t>(cfg.hash_capacity));
    lv.used.assign(static_cast<size_t>(cfg.hash_capacity), 0);
    lv.codes = Eigen::MatrixXd::Zero(cfg.code_dim, cfg.hash_capacity);
  }
}

int LatentGrid::home_slot(const Level& lv, const VertexKey& key) const {
  const uint64_t h = (static_cast<uint64_t>(static_cast<uint32_t>(key.ix)) * kP1) ^
                     (static_cast<uint64_t>(static_cast<uint32_t>(key.iy)) * kP2) ^
                     (static_cast<uint64_t>(static_cast<uint32_t>(key.iz)) * kP3);
  return static_cast<int>(h % static_cast<uint64_t>(lv.keys.size()));
}

int LatentGrid::find(int level, const VertexKey& key) const {
  const Level& lv = levels_[static_cast<size_t>(level)];
  const int home = home_slot(lv, key);
  const int cap = static_cast<int>(lv.keys.size());
  for (int i = 0; i < kMaxProbe; ++i) {
    const int s = (home + i) % cap;
    if (!lv.used[static_cast<size_t>(s)]) return -1;
    if (lv.keys[static_cast<size_t>(s)] == key) return s;
  }
  return -1;
}

int LatentGrid::allocate(int level, const VertexKey& key) {
  Level& lv = levels_[static_cast<size_t>(level)];
  const int home = home_slot(lv, key);
  const int cap = static_cast<int>(lv.keys.size());
  for (int i = 0; i < kMaxProbe; ++i) {
    const int s = (home + i) % cap;
    if (!lv.used[static_cast<size_t>(s)]) {
      lv.used[static_cast<size_t>(s)] = 1;
      lv.keys[static_cast<size_t>(s)] = key;
      ++lv.count;
      return s;
    }
    if (lv.keys[static_cast<size_t>(s)] == key) return s;
  }
  return home;  // probe window saturated: share the home slot's code
}

void LatentGrid::allocate_around(const Eigen::Vector3d& x) {
  for (int l = 0; l < cfg_.levels; ++l) {
    const double voxel = levels_[static_cast<size_t>(l)].voxel;
    const int32_t ix = static_cast<int32_t>(std::floor(x.x() / voxel));
    const int32_t iy = static_cast<int32_t>(std::floor(x.y() / voxel));
    const int32_t iz = static_cast<int32_t>(std::floor(x.z() / voxel));
    for (int c = 0; c < 8; ++c) {
      allocate(l, VertexKey{ix + (c & 1), iy + ((c >> 1) & 1), iz + ((c >> 2) & 1)});
    }
  }
}

void LatentGrid::restore_slot(int level, int slot, const VertexKey& key) {
  Level& lv = levels_[static_cast<size_t>(level)];
  if (!lv.used[static_cast<size_t>(slot)]) ++lv.count;
  lv.used[static_cast<size_t>(slot)] = 1;
  lv.keys[static_cast<size_t>(slot)] = key;
}

CornerLookup LatentGrid::lookup(int level, const Eigen::Vector3d& x) const {
  const Level& lv = levels_[static_cast<size_t>(level)];
  const double inv = 1.0 / lv.voxel;
  const Eigen::Vector3d g = x * inv;
  const Eigen::Vector3d base(std::floor(g.x()), std::floor(g.y()), std::floor(g.z()));
  const Eigen::Vector3d t = g - base;

  CornerLookup out;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const VertexKey key{static_cast<int32_t>(base.x()) + dx, static_cast<int32_t>(base.y()) + dy,
                        static_cast<int32_t>(base.z()) + dz};
    const double wx = dx ? t.x() : 1.0 - t.x();
    const double wy = dy ? t.y() : 1.0 - t.y();
    const double wz = dz ? t.z() : 1.0 - t.z();
    out.keys[static_cast<size_t>(c)] = key;
    out.slots[static_cast<size_t>(c)] = find(level, key);
    out.weights[static_cast<size_t>(c)] = wx * wy * wz;
    out.weight_grads[static_cast<size_t>(c)] =
        Eigen::Vector3d((dx ? 1.0 : -1.0) * wy * wz, (dy ? 1.0 : -1.0) * wx * wz,
                        (dz ? 1.0 : -1.0) * wx * wy) *
        inv;
  }
  return out;
}

Eigen::VectorXd LatentGrid::interpolate(const Eigen::Vector3d& x) const {
  Eigen::VectorXd latent = Eigen::VectorXd::Zero(latent_dim());
  for (int l = 0; l < cfg_.levels; ++l) {
    const CornerLookup corners = lookup(l, x);
    auto seg = latent.segment(l * cfg_.code_dim, cfg_.code_dim);
    for (int c = 0; c < 8; ++c) {
      const int s = corners.slots[static_cast<size_t>(c)];
      if (s >= 0) seg += corners.weights[static_cast<size_t>(c)] * codes(l).col(s);
    }
  }
  return latent;
}

int LatentGrid::total_allocated() const {
  int n = 0;
  for (const auto& lv : levels_) n += lv.count;
  return n;
}

std::vector<std::array<int, 3>> LatentGrid::adjacent_pairs() const {
  std::vector<std::array<int, 3>> pairs;
  for (int l = 0; l < cfg_.levels; ++l) {
    const Level& lv = levels_[static_cast<size_t>(l)];
    for (int s = 0; s < static_cast<int>(lv.keys.size()); ++s) {
      if (!lv.used[static_cast<size_t>(s)]) continue;
      const VertexKey& k = lv.keys[static_cast<size_t>(s)];
      const VertexKey nbrs[3] = {{k.ix + 1, k.iy, k.iz}, {k.ix, k.iy + 1, k.iz},
                                 {k.ix, k.iy, k.iz + 1}};
      for (const auto& nk : nbrs) {
        const int s2 = find(l, nk);
        if (s2 >= 0 && s2 != s) pairs.push_back({l, s, s2});
      }
    }
  }
  return pairs;
}

}  // namespace voxloop
