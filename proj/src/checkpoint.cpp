#include <cstdio>
#include <cstring>

#include "voxloop/scene_field.hpp"

namespace voxloop {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'C', '2'};
constexpr uint32_t kVersion = 1;

struct Writer {
  std::FILE* f;
  void u32(uint32_t v) { std::fwrite(&v, 4, 1, f); }
  void i32(int32_t v) { std::fwrite(&v, 4, 1, f); }
  void f32(float v) { std::fwrite(&v, 4, 1, f); }
  void f32_block(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) f32(static_cast<float>(m(r, c)));
  }
};

struct Reader {
  std::FILE* f;
  uint32_t u32() {
    uint32_t v = 0;
    if (std::fread(&v, 4, 1, f) != 1) throw std::runtime_error("checkpoint: truncated file");
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  float f32() {
    float v = 0;
    if (std::fread(&v, 4, 1, f) != 1) throw std::runtime_error("checkpoint: truncated file");
    return v;
  }
  void f32_block(Eigen::Ref<Eigen::MatrixXd> m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<double>(f32());
  }
};

void write_mlp(Writer& w, const Mlp& mlp) {
  w.u32(static_cast<uint32_t>(mlp.layers().size()));
  for (const auto& layer : mlp.layers()) {
    w.u32(static_cast<uint32_t>(layer.w.rows()));
    w.u32(static_cast<uint32_t>(layer.w.cols()));
    w.u32(static_cast<uint32_t>(layer.act));
    w.f32_block(layer.w);
    w.f32_block(layer.b);
  }
}

void read_mlp(Reader& r, Mlp& mlp) {
  const uint32_t n = r.u32();
  if (n != mlp.layers().size()) throw std::runtime_error("checkpoint: MLP layout mismatch");
  for (auto& layer : mlp.layers()) {
    const uint32_t rows = r.u32(), cols = r.u32(), act = r.u32();
    if (rows != static_cast<uint32_t>(layer.w.rows()) ||
        cols != static_cast<uint32_t>(layer.w.cols()) ||
        act != static_cast<uint32_t>(layer.act)) {
      throw std::runtime_error("checkpoint: MLP layer shape mismatch");
    }
    r.f32_block(layer.w);
    r.f32_block(layer.b);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const SceneField& field) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  Writer w{f};
  const auto& cfg = field.config();

  std::fwrite(kMagic, 1, 4, f);
  w.u32(kVersion);
  w.u32(static_cast<uint32_t>(cfg.grid.levels));
  w.u32(static_cast<uint32_t>(cfg.grid.code_dim));
  w.u32(static_cast<uint32_t>(cfg.hidden));
  w.u32(static_cast<uint32_t>(cfg.classes));
  w.u32(static_cast<uint32_t>(cfg.encoding.bins_per_axis));
  w.u32(static_cast<uint32_t>(cfg.grid.hash_capacity));
  w.f32(static_cast<float>(cfg.truncation));
  for (int a = 0; a < 3; ++a) w.f32(static_cast<float>(cfg.encoding.bounds_min[a]));
  for (int a = 0; a < 3; ++a) w.f32(static_cast<float>(cfg.encoding.bounds_max[a]));
  for (int l = 0; l < cfg.grid.levels; ++l)
    w.f32(static_cast<float>(cfg.grid.voxel_sizes[static_cast<size_t>(l)]));

  for (int l = 0; l < cfg.grid.levels; ++l) {
    std::vector<int> slots;
    for (int s = 0; s < cfg.grid.hash_capacity; ++s) {
      if (field.grid().slot_used(l, s)) slots.push_back(s);
    }
    w.u32(static_cast<uint32_t>(slots.size()));
    for (int s : slots) {
      const VertexKey& k = field.grid().slot_key(l, s);
      w.u32(static_cast<uint32_t>(s));
      w.i32(k.ix);
      w.i32(k.iy);
      w.i32(k.iz);
      w.f32_block(field.grid().codes(l).col(s));
    }
  }

  write_mlp(w, field.stack().geom);
  write_mlp(w, field.stack().color);
  write_mlp(w, field.stack().sem);
  std::fclose(f);
}

SceneField load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  Reader r{f};

  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    std::fclose(f);
    throw std::runtime_error("checkpoint: bad magic");
  }
  const uint32_t version = r.u32();
  if (version != kVersion) {
    std::fclose(f);
    throw std::runtime_error("checkpoint: unsupported version");
  }

  SceneFieldConfig cfg;
  cfg.grid.levels = static_cast<int>(r.u32());
  cfg.grid.code_dim = static_cast<int>(r.u32());
  cfg.hidden = static_cast<int>(r.u32());
  cfg.classes = static_cast<int>(r.u32());
  cfg.encoding.bins_per_axis = static_cast<int>(r.u32());
  cfg.grid.hash_capacity = static_cast<int>(r.u32());
  cfg.truncation = static_cast<double>(r.f32());
  for (int a = 0; a < 3; ++a) cfg.encoding.bounds_min[a] = static_cast<double>(r.f32());
  for (int a = 0; a < 3; ++a) cfg.encoding.bounds_max[a] = static_cast<double>(r.f32());
  cfg.grid.voxel_sizes.clear();
  for (int l = 0; l < cfg.grid.levels; ++l)
    cfg.grid.voxel_sizes.push_back(static_cast<double>(r.f32()));

  SceneField field(cfg);
  for (int l = 0; l < cfg.grid.levels; ++l) {
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
      const int slot = static_cast<int>(r.u32());
      VertexKey key{r.i32(), r.i32(), r.i32()};
      field.grid().restore_slot(l, slot, key);
      r.f32_block(field.grid().codes(l).col(slot));
    }
  }

  read_mlp(r, field.stack().geom);
  read_mlp(r, field.stack().color);
  read_mlp(r, field.stack().sem);
  std::fclose(f);
  return field;
}

}  // namespace voxloop
