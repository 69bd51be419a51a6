#include "voxloop/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace voxloop {

namespace {

std::string frame_path(const std::string& dir, const char* sub, int id, const char* ext) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.%s", id, ext);
  return dir + "/" + sub + "/" + name;
}

void read_pnm_header(std::FILE* f, const char* expect_magic, int* w, int* h, int* maxval,
                     const std::string& path) {
  char magic[3] = {0, 0, 0};
  if (std::fscanf(f, "%2s", magic) != 1 || std::string(magic) != expect_magic) {
    throw DatasetError("bad magic in " + path);
  }
  int vals[3], got = 0;
  while (got < 3) {
    int ch = std::fgetc(f);
    if (ch == '#') {
      while (ch != '\n' && ch != EOF) ch = std::fgetc(f);
    } else if (!std::isspace(ch)) {
      std::ungetc(ch, f);
      if (std::fscanf(f, "%d", &vals[got]) != 1) throw DatasetError("bad header in " + path);
      ++got;
    }
  }
  std::fgetc(f);  // single whitespace before raster
  *w = vals[0];
  *h = vals[1];
  *maxval = vals[2];
}

}  // namespace

DatasetManifest read_manifest(const std::string& dir) {
  const std::string path = dir + "/manifest.txt";
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path);
  DatasetManifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "width") m.width = std::stoi(val);
    else if (key == "height") m.height = std::stoi(val);
    else if (key == "fx") m.fx = std::stod(val);
    else if (key == "fy") m.fy = std::stod(val);
    else if (key == "cx") m.cx = std::stod(val);
    else if (key == "cy") m.cy = std::stod(val);
    else if (key == "depth_scale") m.depth_scale = std::stod(val);
    else if (key == "num_classes") m.num_classes = std::stoi(val);
    else if (key == "frame_count") m.frame_count = std::stoi(val);
  }
  if (m.width <= 0 || m.height <= 0 || m.frame_count <= 0) {
    throw DatasetError("incomplete manifest in " + path);
  }
  return m;
}

void write_manifest(const std::string& dir, const DatasetManifest& m) {
  std::ofstream out(dir + "/manifest.txt");
  out << "width=" << m.width << "\n"
      << "height=" << m.height << "\n"
      << "fx=" << m.fx << "\n"
      << "fy=" << m.fy << "\n"
      << "cx=" << m.cx << "\n"
      << "cy=" << m.cy << "\n"
      << "depth_scale=" << m.depth_scale << "\n"
      << "num_classes=" << m.num_classes << "\n"
      << "frame_count=" << m.frame_count << "\n";
}

void create_dataset_dirs(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir + "/color");
  fs::create_directories(dir + "/depth");
  fs::create_directories(dir + "/sem");
}

Frame load_frame(const std::string& dir, const DatasetManifest& m, int id) {
  Frame frame;
  frame.id = id;
  frame.intr = m.intrinsics();
  const size_t n = static_cast<size_t>(m.width) * static_cast<size_t>(m.height);

  {
    const std::string path = frame_path(dir, "color", id, "ppm");
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DatasetError("cannot open " + path);
    int w, h, maxval;
    read_pnm_header(f, "P6", &w, &h, &maxval, path);
    if (w != m.width || h != m.height) throw DatasetError("size mismatch in " + path);
    frame.color.resize(3 * n);
    if (std::fread(frame.color.data(), 1, 3 * n, f) != 3 * n) {
      std::fclose(f);
      throw DatasetError("truncated raster in " + path);
    }
    std::fclose(f);
  }
  {
    const std::string path = frame_path(dir, "depth", id, "pgm");
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DatasetError("cannot open " + path);
    int w, h, maxval;
    read_pnm_header(f, "P5", &w, &h, &maxval, path);
    if (w != m.width || h != m.height) throw DatasetError("size mismatch in " + path);
    std::vector<uint8_t> raw(2 * n);
    if (std::fread(raw.data(), 1, 2 * n, f) != 2 * n) {
      std::fclose(f);
      throw DatasetError("truncated raster in " + path);
    }
    std::fclose(f);
    frame.depth.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const uint16_t v = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
      frame.depth[i] = static_cast<double>(v) / m.depth_scale;
    }
  }
  {
    const std::string path = frame_path(dir, "sem", id, "pgm");
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DatasetError("cannot open " + path);
    int w, h, maxval;
    read_pnm_header(f, "P5", &w, &h, &maxval, path);
    if (w != m.width || h != m.height) throw DatasetError("size mismatch in " + path);
    frame.semantics.resize(n);
    if (std::fread(frame.semantics.data(), 1, n, f) != n) {
      std::fclose(f);
      throw DatasetError("truncated raster in " + path);
    }
    std::fclose(f);
  }
  return frame;
}

void save_frame(const std::string& dir, const DatasetManifest& m, const Frame& frame) {
  const size_t n = static_cast<size_t>(m.width) * static_cast<size_t>(m.height);
  {
    const std::string path = frame_path(dir, "color", frame.id, "ppm");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DatasetError("cannot write " + path);
    std::fprintf(f, "P6\n%d %d\n255\n", m.width, m.height);
    std::fwrite(frame.color.data(), 1, 3 * n, f);
    std::fclose(f);
  }
  {
    const std::string path = frame_path(dir, "depth", frame.id, "pgm");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DatasetError("cannot write " + path);
    std::fprintf(f, "P5\n%d %d\n65535\n", m.width, m.height);
    std::vector<uint8_t> raw(2 * n);
    for (size_t i = 0; i < n; ++i) {
      const double d = frame.depth[i];
      uint16_t v = 0;
      if (d > 0.0) {
        const double scaled = std::round(d * m.depth_scale);
        v = static_cast<uint16_t>(std::min(scaled, 65535.0));
      }
      raw[2 * i] = static_cast<uint8_t>(v >> 8);
      raw[2 * i + 1] = static_cast<uint8_t>(v & 0xff);
    }
    std::fwrite(raw.data(), 1, 2 * n, f);
    std::fclose(f);
  }
  {
    const std::string path = frame_path(dir, "sem", frame.id, "pgm");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DatasetError("cannot write " + path);
    std::fprintf(f, "P5\n%d %d\n255\n", m.width, m.height);
    std::fwrite(frame.semantics.data(), 1, n, f);
    std::fclose(f);
  }
}

}  // namespace voxloop
