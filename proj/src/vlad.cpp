#include "voxloop/vlad.hpp"

#include <cstdio>
#include <random>

namespace voxloop {

namespace {

int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& code) {
  int best = 0;
  double best_sq = (centroids.col(0) - code).squaredNorm();
  for (int k = 1; k < centroids.cols(); ++k) {
    const double d = (centroids.col(k) - code).squaredNorm();
    if (d < best_sq) {
      best_sq = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

Codebook train_codebook(const Eigen::MatrixXd& codes, int k, uint64_t seed, int max_iters,
                        double tol) {
  const int n = static_cast<int>(codes.cols());
  if (n < k) throw InsufficientCodesError();

  std::mt19937_64 rng(seed);
  Codebook cb;
  cb.centroids.resize(codes.rows(), k);

  // k-means++ seeding
  std::uniform_int_distribution<int> first(0, n - 1);
  cb.centroids.col(0) = codes.col(first(rng));
  std::vector<double> dist_sq(static_cast<size_t>(n), 0.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (int j = 0; j < c; ++j) {
        best = std::min(best, (codes.col(i) - cb.centroids.col(j)).squaredNorm());
      }
      dist_sq[static_cast<size_t>(i)] = best;
      total += best;
    }
    if (total <= 0.0) {
      // all remaining codes coincide with chosen centroids; reuse any point
      cb.centroids.col(c) = codes.col(first(rng));
      continue;
    }
    std::uniform_real_distribution<double> pick(0.0, total);
    double target = pick(rng), acc = 0.0;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += dist_sq[static_cast<size_t>(i)];
      if (acc >= target) {
        chosen = i;
        break;
      }
    }
    cb.centroids.col(c) = codes.col(chosen);
  }

  std::vector<int> assign(static_cast<size_t>(n), 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    for (int i = 0; i < n; ++i) assign[static_cast<size_t>(i)] = nearest_centroid(cb.centroids, codes.col(i));

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(codes.rows(), k);
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.col(assign[static_cast<size_t>(i)]) += codes.col(i);
      ++counts[static_cast<size_t>(assign[static_cast<size_t>(i)])];
    }
    double max_move = 0.0;
    for (int c = 0; c < k; ++c) {
      Eigen::VectorXd updated;
      if (counts[static_cast<size_t>(c)] > 0) {
        updated = sums.col(c) / counts[static_cast<size_t>(c)];
      } else {
        // empty cluster: reseed to the point farthest from its centroid
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d =
              (codes.col(i) - cb.centroids.col(assign[static_cast<size_t>(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        updated = codes.col(far);
      }
      max_move = std::max(max_move, (updated - cb.centroids.col(c)).norm());
      cb.centroids.col(c) = updated;
    }
    if (max_move < tol) break;
  }
  cb.trained = true;
  return cb;
}

double kmeans_objective(const Eigen::MatrixXd& codes, const Codebook& cb) {
  double total = 0.0;
  for (int i = 0; i < codes.cols(); ++i) {
    total += (codes.col(i) - cb.centroids.col(nearest_centroid(cb.centroids, codes.col(i))))
                 .squaredNorm();
  }
  return total;
}

Eigen::VectorXd aggregate_vlad(const Eigen::MatrixXd& codes, const Codebook& cb) {
  if (!cb.trained) throw UntrainedCodebookError();
  const int dim = cb.dim(), k = cb.k();
  Eigen::VectorXd desc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim) * k);
  if (codes.cols() == 0) return desc;

  for (int i = 0; i < codes.cols(); ++i) {
    const int c = nearest_centroid(cb.centroids, codes.col(i));
    desc.segment(static_cast<Eigen::Index>(c) * dim, dim) += codes.col(i) - cb.centroids.col(c);
  }
  for (int c = 0; c < k; ++c) {
    auto block = desc.segment(static_cast<Eigen::Index>(c) * dim, dim);
    const double norm = block.norm();
    if (norm > 1e-12) block /= norm;
  }
  const double total = desc.norm();
  if (total > 1e-12) desc /= total;
  else desc.setZero();  // degenerate: all codes at centroids
  return desc;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return a.dot(b) / (na * nb);
}

RetrievalResult retrieve(const Eigen::VectorXd& query,
                         const std::vector<std::pair<int, Eigen::VectorXd>>& db) {
  if (db.empty()) throw EmptyDatabaseError();
  RetrievalResult best;
  for (const auto& [id, desc] : db) {
    const double sim = cosine_similarity(query, desc);
    if (sim > best.similarity || (sim == best.similarity && id < best.place_id)) {
      best.place_id = id;
      best.similarity = sim;
    }
  }
  return best;
}

void write_descriptor_db_csv(const std::string& path,
                             const std::vector<std::pair<int, Eigen::VectorXd>>& db) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write descriptor db: " + path);
  std::fprintf(f, "place_id,dim,values...\n");
  for (const auto& [id, desc] : db) {
    std::fprintf(f, "%d,%d", id, static_cast<int>(desc.size()));
    for (Eigen::Index i = 0; i < desc.size(); ++i) std::fprintf(f, ",%.9g", desc[i]);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace voxloop
