// Sparse voxel grid of learnable latent codes. Vertices are indexed per level
// by a 3-prime XOR hash with linear open addressing; when a probe window is
// saturated the colliding vertex shares the slot at its home position, as in
// multiresolution hash encodings. Unallocated vertices read as the zero code;
// allocation happens only through training writes.

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace voxloop {

struct VertexKey {
  int32_t ix = 0, iy = 0, iz = 0;
  bool operator==(const VertexKey& o) const { return ix == o.ix && iy == o.iy && iz == o.iz; }
};

struct LatentGridConfig {
  int levels = 2;
  int code_dim = 8;  // F
  std::vector<double> voxel_sizes = {0.10, 0.05};
  int hash_capacity = 1 << 17;  // slots per level
};

/// Result of one trilinear lookup at a single level: the 8 voxel-corner slots
/// (-1 where unallocated) and their interpolation weights.
struct CornerLookup {
  std::array<int, 8> slots;
  std::array<double, 8> weights;
  std::array<VertexKey, 8> keys;
  // d weight_c / d x for pose/tracking gradients
  std::array<Eigen::Vector3d, 8> weight_grads;
};

class LatentGrid {
 public:
  explicit LatentGrid(const LatentGridConfig& cfg);

  const LatentGridConfig& config() const { return cfg_; }
  int latent_dim() const { return cfg_.code_dim * cfg_.levels; }

  /// Exact-match lookup; -1 when the vertex has never been allocated.
  int find(int level, const VertexKey& key) const;

  /// Insert-or-find. Claims an empty slot, or falls back to the shared home
  /// slot when the probe window is saturated.
  int allocate(int level, const VertexKey& key);

  /// Allocates the 8 corners of the voxel containing x, at every level.
  void allocate_around(const Eigen::Vector3d& x);

  /// Marks a specific slot used with the given key (checkpoint restore).
  void restore_slot(int level, int slot, const VertexKey& key);

  /// Corner slots and trilinear weights of x's voxel at `level`.
  CornerLookup lookup(int level, const Eigen::Vector3d& x) const;

  /// Trilinear interpolation of the corner codes, concatenated over levels
  /// into a (code_dim * levels)-vector. Unallocated corners contribute zero.
  Eigen::VectorXd interpolate(const Eigen::Vector3d& x) const;

  Eigen::MatrixXd& codes(int level) { return levels_[static_cast<size_t>(level)].codes; }
  const Eigen::MatrixXd& codes(int level) const {
    return levels_[static_cast<size_t>(level)].codes;
  }
  bool slot_used(int level, int slot) const {
    return levels_[static_cast<size_t>(level)].used[static_cast<size_t>(slot)] != 0;
  }
  const VertexKey& slot_key(int level, int slot) const {
    return levels_[static_cast<size_t>(level)].keys[static_cast<size_t>(slot)];
  }
  int allocated(int level) const { return levels_[static_cast<size_t>(level)].count; }
  int total_allocated() const;

  /// (level, slot_a, slot_b) for every +x/+y/+z neighbor pair of allocated
  /// vertices, in deterministic slot order. Drives the smoothness loss.
  std::vector<std::array<int, 3>> adjacent_pairs() const;

 private:
  struct Level {
    double voxel = 0.1;
    std::vector<VertexKey> keys;
    std::vector<uint8_t> used;
    Eigen::MatrixXd codes;  // code_dim x capacity, zero-initialized
    int count = 0;
  };

  static constexpr int kMaxProbe = 64;
  int home_slot(const Level& lv, const VertexKey& key) const;

  LatentGridConfig cfg_;
  std::vector<Level> levels_;
};

}  // namespace voxloop
