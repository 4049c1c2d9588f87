#include "imkc/fcm.hpp"

#include "imkc/error.hpp"
#include "imkc/feature_cluster.hpp"
#include "imkc/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imkc {

double fcm_objective(const Eigen::MatrixXd& points, const Eigen::MatrixXd& memberships,
                     const Eigen::MatrixXd& centers, double fuzzifier) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double u = memberships(i, c);
      if (u == 0.0) continue;
      total += std::pow(u, fuzzifier) * (points.row(i) - centers.row(c)).squaredNorm();
    }
  }
  return total;
}

Eigen::MatrixXd fcm_memberships(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                                double fuzzifier) {
  const auto n = points.rows();
  const auto k = centers.rows();
  const double exponent = 1.0 / (fuzzifier - 1.0);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd logits(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index hit = -1;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double d2 = (points.row(i) - centers.row(c)).squaredNorm();
      if (d2 == 0.0) {
        hit = c;
        break;
      }
      logits(c) = -exponent * std::log(d2);
    }
    if (hit >= 0) {
      u(i, hit) = 1.0;
      continue;
    }
    // u_ic = 1 / sum_c' (d_ic^2 / d_ic'^2)^{1/(f-1)}, evaluated as a softmax.
    const double top = logits.maxCoeff();
    const Eigen::ArrayXd w = (logits.array() - top).exp();
    u.row(i) = (w / w.sum()).matrix().transpose();
  }
  return u;
}

Eigen::MatrixXd fcm_centers(const Eigen::MatrixXd& points, const Eigen::MatrixXd& memberships,
                            double fuzzifier) {
  const Eigen::MatrixXd weights = memberships.array().pow(fuzzifier).matrix();  // N x C
  Eigen::MatrixXd centers = weights.transpose() * points;
  const Eigen::VectorXd mass = weights.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    if (!(mass(c) > 0.0)) throw NumericalError("fuzzy c-means produced a cluster with zero mass");
    centers.row(c) /= mass(c);
  }
  return centers;
}

FuzzyAssignment fuzzy_cmeans(const Eigen::MatrixXd& points, const FcmOptions& options) {
  const auto n = points.rows();
  if (options.clusters < 2 || options.clusters > n) {
    throw ConfigError("fuzzy c-means cluster count C=" + std::to_string(options.clusters) +
                      " must lie in [2, " + std::to_string(n) + "]");
  }
  if (!(options.fuzzifier > 1.0)) throw ConfigError("fuzzifier must exceed 1");
  if (options.restarts < 1 || options.max_iter < 1) {
    throw ConfigError("fuzzy c-means needs at least one restart and one iteration");
  }
  if (!points.allFinite()) throw NumericalError("fuzzy c-means input contains non-finite values");

  FuzzyAssignment best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(derive_seed(options.seed, "fcm", static_cast<std::uint64_t>(r)));
    FuzzyAssignment run;
    run.fuzzifier = options.fuzzifier;
    run.centers.resize(options.clusters, points.cols());
    const auto seeds = kmeanspp_seed(points, options.clusters, rng);
    for (int c = 0; c < options.clusters; ++c) run.centers.row(c) = points.row(seeds[static_cast<std::size_t>(c)]);

    run.memberships = fcm_memberships(points, run.centers, options.fuzzifier);
    run.objective_trace.push_back(fcm_objective(points, run.memberships, run.centers, options.fuzzifier));
    for (int iter = 0; iter < options.max_iter; ++iter) {
      run.centers = fcm_centers(points, run.memberships, options.fuzzifier);
      run.objective_trace.push_back(fcm_objective(points, run.memberships, run.centers, options.fuzzifier));
      Eigen::MatrixXd next = fcm_memberships(points, run.centers, options.fuzzifier);
      const double change = (next - run.memberships).cwiseAbs().maxCoeff();
      run.memberships = std::move(next);
      run.objective_trace.push_back(fcm_objective(points, run.memberships, run.centers, options.fuzzifier));
      run.iterations = iter + 1;
      if (change < options.tol) {
        run.converged = true;
        break;
      }
    }
    run.objective = run.objective_trace.back();
    if (run.objective < best.objective) best = std::move(run);
  }
  return best;
}

ModalAssignment modal_assignment(const Eigen::MatrixXd& memberships) {
  ModalAssignment out;
  out.labels.resize(static_cast<std::size_t>(memberships.rows()));
  out.probabilities.resize(memberships.rows());
  for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
    Eigen::Index arg = 0;
    out.probabilities(i) = memberships.row(i).maxCoeff(&arg);
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

std::vector<bool> low_confidence_mask(const Eigen::VectorXd& modal_probabilities) {
  const auto n = modal_probabilities.size();
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  if (n < 2) return mask;
  const double mean = modal_probabilities.mean();
  const double sd = std::sqrt((modal_probabilities.array() - mean).square().sum() / static_cast<double>(n - 1));
  // Rounding in the mean of identical values must not flag anything.
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) return mask;
  const double threshold = mean - sd;
  for (Eigen::Index i = 0; i < n; ++i) mask[static_cast<std::size_t>(i)] = modal_probabilities(i) < threshold;
  return mask;
}

}  // namespace imkc
