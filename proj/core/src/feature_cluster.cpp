#include "imkc/feature_cluster.hpp"

#include "imkc/error.hpp"

#include <cmath>
#include <limits>

namespace imkc {
namespace {

struct LloydRun {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

// Squared distances from every point to every centroid: n x k.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
  Eigen::MatrixXd out(points.rows(), centroids.rows());
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    out.col(c) = (points.rowwise() - centroids.row(c)).rowwise().squaredNorm();
  }
  return out;
}

Eigen::MatrixXd means(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, points.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    centroids.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
    counts(labels[static_cast<std::size_t>(i)]) += 1.0;
  }
  for (int c = 0; c < k; ++c) {
    if (counts(c) > 0) centroids.row(c) /= counts(c);
  }
  return centroids;
}

double wcss(const Eigen::MatrixXd& points, const std::vector<int>& labels,
            const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

LloydRun lloyd(const Eigen::MatrixXd& points, int k, const KMeansOptions& options, Rng& rng) {
  const auto n = points.rows();
  LloydRun run;
  run.centroids.resize(k, points.cols());
  const auto seeds = kmeanspp_seed(points, k, rng);
  for (int c = 0; c < k; ++c) run.centroids.row(c) = points.row(seeds[static_cast<std::size_t>(c)]);
  run.labels.assign(static_cast<std::size_t>(n), 0);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::MatrixXd dist = squared_distances(points, run.centroids);
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      dist.row(i).minCoeff(&best);  // first minimum on ties
      run.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
      ++sizes[static_cast<std::size_t>(best)];
    }

    // Refill empty clusters with the point farthest from its own centroid.
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = -1;
      double far_dist = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int own = run.labels[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(own)] < 2) continue;
        if (dist(i, own) > far_dist) {
          far_dist = dist(i, own);
          farthest = i;
        }
      }
      --sizes[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(farthest)])];
      run.labels[static_cast<std::size_t>(farthest)] = c;
      ++sizes[static_cast<std::size_t>(c)];
    }

    Eigen::MatrixXd updated = means(points, run.labels, k);
    const double shift = (updated - run.centroids).rowwise().norm().maxCoeff();
    run.centroids = std::move(updated);
    run.trace.push_back(wcss(points, run.labels, run.centroids));
    run.iterations = iter + 1;
    if (shift < options.tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace

std::vector<Eigen::Index> kmeanspp_seed(const Eigen::MatrixXd& points, int clusters, Rng& rng) {
  const auto n = points.rows();
  std::vector<Eigen::Index> chosen;
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  chosen.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  taken[static_cast<std::size_t>(chosen.back())] = true;

  Eigen::VectorXd nearest = (points.rowwise() - points.row(chosen.back())).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < clusters) {
    const double total = nearest.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target && nearest(i) > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) nearest.maxCoeff(&pick);
    } else {
      // All remaining points coincide with a centre; pick any unused row.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) free.push_back(i);
      }
      pick = free[rng.index(free.size())];
    }
    chosen.push_back(pick);
    taken[static_cast<std::size_t>(pick)] = true;
    nearest = nearest.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }
  return chosen;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  if (options.clusters < 1) throw ConfigError("k-means needs at least one cluster");
  if (options.clusters > points.rows()) {
    throw ConfigError("k-means cluster count " + std::to_string(options.clusters) +
                      " exceeds the number of points " + std::to_string(points.rows()));
  }
  if (options.restarts < 1 || options.max_iter < 1) {
    throw ConfigError("k-means needs at least one restart and one iteration");
  }

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(options.seed, "kmeans", static_cast<std::uint64_t>(r)));
    LloydRun run = lloyd(points, options.clusters, options, rng);
    const double inertia = run.trace.back();
    if (inertia < best.inertia) {
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
      best.inertia = inertia;
      best.inertia_trace = std::move(run.trace);
      best.iterations = run.iterations;
      best.best_run = r;
      best.converged = run.converged;
    }
  }
  return best;
}

std::vector<Eigen::Index> FeatureClustering::members(int label) const {
  std::vector<Eigen::Index> out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == label) out.push_back(static_cast<Eigen::Index>(j));
  }
  return out;
}

FeatureClustering kmeans_features(const View& view, const KMeansOptions& options, bool standardize) {
  if (options.clusters < 1) throw ConfigError("feature cluster count must be at least 1");
  if (static_cast<std::size_t>(options.clusters) > view.features()) {
    throw ConfigError("view '" + view.name + "' has " + std::to_string(view.features()) +
                      " features, fewer than the " + std::to_string(options.clusters) +
                      " requested feature clusters");
  }
  Eigen::MatrixXd points = view.matrix.transpose();
  if (standardize) {
    for (Eigen::Index j = 0; j < points.rows(); ++j) {
      const double mean = points.row(j).mean();
      points.row(j).array() -= mean;
      const double sd = std::sqrt(points.row(j).squaredNorm() / static_cast<double>(points.cols()));
      if (sd > 0.0) points.row(j) /= sd;
    }
  }
  KMeansResult fit = kmeans(points, options);

  FeatureClustering out;
  out.view_name = view.name;
  out.labels = std::move(fit.labels);
  out.centroids = std::move(fit.centroids);
  out.seed = options.seed;
  out.inertia = fit.inertia;
  out.inertia_trace = std::move(fit.inertia_trace);
  return out;
}

}  // namespace imkc
