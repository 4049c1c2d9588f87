#pragma once

#include "imkc/dataset.hpp"
#include "imkc/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace imkc {

struct KMeansOptions {
  int clusters = 2;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;  ///< stop when every centroid moves less than this
};

/// Result of k-means on the rows of a point matrix. Labels are 0-based.
struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;          ///< clusters x dim
  double inertia = 0.0;               ///< within-cluster sum of squares
  std::vector<double> inertia_trace;  ///< WCSS after every Lloyd iteration of the winning run
  int iterations = 0;
  int best_run = 0;
  bool converged = false;
};

/// k-means++ seeding: returns the row indices chosen as initial centres.
std::vector<Eigen::Index> kmeanspp_seed(const Eigen::MatrixXd& points, int clusters, Rng& rng);

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs.
/// Empty clusters are refilled with the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

/// Per-view partition of feature columns. Labels are 0-based internally and
/// written 1-based in exported tables.
struct FeatureClustering {
  std::string view_name;
  std::vector<int> labels;  ///< one per feature column
  Eigen::MatrixXd centroids;  ///< clusters x N (points live in sample space)
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::vector<double> inertia_trace;

  int clusters() const { return static_cast<int>(centroids.rows()); }
  /// Column indices of the features carrying `label`.
  std::vector<Eigen::Index> members(int label) const;
};

/// Clusters the features of a view: each column is a point in R^N.
/// With `standardize`, every feature is z-scored over samples first.
FeatureClustering kmeans_features(const View& view, const KMeansOptions& options,
                                  bool standardize = false);

}  // namespace imkc
