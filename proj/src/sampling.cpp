#include "voxloop/sampling.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace voxloop {

namespace {

SampleSet gather(const Frame& frame, const SceneField& field,
                 const std::vector<Eigen::Vector2i>& pixels) {
  SampleSet set;
  set.pixels = pixels;
  set.codes.resize(field.grid().latent_dim(), static_cast<Eigen::Index>(pixels.size()));
  set.points.reserve(pixels.size());
  set.labels.reserve(pixels.size());
  for (size_t i = 0; i < pixels.size(); ++i) {
    const int u = pixels[i].x(), v = pixels[i].y();
    const Eigen::Vector3d world = frame.pose * frame.back_project(u, v);
    set.points.push_back(world);
    set.labels.push_back(frame.label_at(u, v));
    set.codes.col(static_cast<Eigen::Index>(i)) = field.grid().interpolate(world);
  }
  return set;
}

}  // namespace

std::vector<int> stratified_quotas(const std::vector<std::pair<int, int>>& class_counts, int M) {
  const size_t n = class_counts.size();
  std::vector<int> quotas(n, 0);
  if (n == 0 || M <= 0) return quotas;

  long long total = 0;
  for (const auto& [cls, count] : class_counts) total += count;
  if (total == 0) return quotas;

  int sum = 0;
  for (size_t i = 0; i < n; ++i) {
    quotas[i] = std::max(
        1, static_cast<int>(std::llround(static_cast<double>(M) * class_counts[i].second /
                                         static_cast<double>(total))));
    sum += quotas[i];
  }
  // Trim the largest quotas first; top up the largest regions. Ties break on
  // the lower class index for determinism.
  while (sum > M) {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i) {
      if (quotas[i] > quotas[best]) best = i;
    }
    if (quotas[best] <= 1) break;  // cannot trim below one sample per class
    --quotas[best];
    --sum;
  }
  while (sum < M) {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i) {
      if (class_counts[i].second > class_counts[best].second) best = i;
    }
    ++quotas[best];
    ++sum;
  }
  return quotas;
}

SampleSet stratified_sample(const Frame& frame, const SceneField& field, int M, uint64_t seed) {
  std::map<int, std::vector<Eigen::Vector2i>> by_class;
  for (int v = 0; v < frame.intr.height; ++v) {
    for (int u = 0; u < frame.intr.width; ++u) {
      if (frame.valid_depth(u, v)) by_class[frame.label_at(u, v)].push_back({u, v});
    }
  }
  if (by_class.empty() || M <= 0) return SampleSet{};

  std::vector<std::pair<int, int>> counts;
  for (const auto& [cls, pixels] : by_class) {
    counts.emplace_back(cls, static_cast<int>(pixels.size()));
  }
  const std::vector<int> quotas = stratified_quotas(counts, M);

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector2i> chosen;
  chosen.reserve(static_cast<size_t>(M));
  for (size_t i = 0; i < counts.size(); ++i) {
    const auto& pixels = by_class[counts[i].first];
    const size_t quota = std::min<size_t>(static_cast<size_t>(quotas[i]), pixels.size());
    std::sample(pixels.begin(), pixels.end(), std::back_inserter(chosen), quota, rng);
  }
  return gather(frame, field, chosen);
}

SampleSet random_sample(const Frame& frame, const SceneField& field, int M, uint64_t seed) {
  std::vector<Eigen::Vector2i> valid;
  for (int v = 0; v < frame.intr.height; ++v) {
    for (int u = 0; u < frame.intr.width; ++u) {
      if (frame.valid_depth(u, v)) valid.push_back({u, v});
    }
  }
  if (valid.empty() || M <= 0) return SampleSet{};

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector2i> chosen;
  chosen.reserve(static_cast<size_t>(M));
  std::sample(valid.begin(), valid.end(), std::back_inserter(chosen), static_cast<size_t>(M),
              rng);
  return gather(frame, field, chosen);
}

}  // namespace voxloop
