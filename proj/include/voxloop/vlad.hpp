// VLAD global descriptors over latent codes: k-means codebook (k-means++
// seeding), residual aggregation with intra- and global normalization,
// cosine retrieval, and the descriptor-database CSV format.

#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "voxloop/sampling.hpp"

namespace voxloop {

struct InsufficientCodesError : std::runtime_error {
  InsufficientCodesError() : std::runtime_error("train_codebook: fewer codes than centroids") {}
};
struct UntrainedCodebookError : std::runtime_error {
  UntrainedCodebookError() : std::runtime_error("aggregate_vlad: codebook not trained") {}
};
struct EmptyDatabaseError : std::runtime_error {
  EmptyDatabaseError() : std::runtime_error("retrieve: empty descriptor database") {}
};

struct Codebook {
  Eigen::MatrixXd centroids;  // dim x K
  bool trained = false;

  int k() const { return static_cast<int>(centroids.cols()); }
  int dim() const { return static_cast<int>(centroids.rows()); }
};

/// Lloyd iterations with k-means++ seeding; deterministic given the seed.
/// Stops after max_iters or when every centroid moves less than tol.
Codebook train_codebook(const Eigen::MatrixXd& codes, int k, uint64_t seed, int max_iters = 100,
                        double tol = 1e-6);

/// Sum-of-squared-distances objective, for monotonicity checks.
double kmeans_objective(const Eigen::MatrixXd& codes, const Codebook& cb);

/// Residuals against nearest centroids, accumulated per centroid block,
/// intra-normalized per block (zero-safe) and globally L2-normalized. Empty
/// input gives the all-zero descriptor.
Eigen::VectorXd aggregate_vlad(const Eigen::MatrixXd& codes, const Codebook& cb);
inline Eigen::VectorXd aggregate_vlad(const SampleSet& set, const Codebook& cb) {
  return aggregate_vlad(set.codes, cb);
}

/// Cosine similarity; zero vectors compare as 0.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct RetrievalResult {
  int place_id = -1;
  double similarity = -2.0;
};

/// Argmax cosine similarity over the database, ties broken toward the lowest
/// place id. Throws EmptyDatabaseError on an empty database.
RetrievalResult retrieve(const Eigen::VectorXd& query,
                         const std::vector<std::pair<int, Eigen::VectorXd>>& db);

/// CSV with header "place_id,dim,values..."
void write_descriptor_db_csv(const std::string& path,
                             const std::vector<std::pair<int, Eigen::VectorXd>>& db);

}  // namespace voxloop
