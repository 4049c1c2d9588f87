#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace imkc {

struct FcmOptions {
  int clusters = 2;
  double fuzzifier = 2.0;
  std::uint64_t seed = 0;
  int restarts = 5;
  int max_iter = 300;
  double tol = 1e-6;  ///< max elementwise membership change
};

/// Soft partition of the rows of an embedding.
struct FuzzyAssignment {
  Eigen::MatrixXd memberships;  ///< N x C, rows sum to one
  Eigen::MatrixXd centers;      ///< C x p
  double fuzzifier = 2.0;
  double objective = 0.0;
  /// Objective after every half-step (membership update, centre update) of
  /// the winning restart.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;

  int clusters() const { return static_cast<int>(centers.rows()); }
};

/// J(U, v) = sum_i sum_c u_ic^f ||x_i - v_c||^2.
double fcm_objective(const Eigen::MatrixXd& points, const Eigen::MatrixXd& memberships,
                     const Eigen::MatrixXd& centers, double fuzzifier);

/// Optimal memberships for fixed centres. A point sitting on a centre gets
/// full membership there (the lowest such centre if several coincide).
Eigen::MatrixXd fcm_memberships(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                                double fuzzifier);

/// Optimal centres for fixed memberships.
Eigen::MatrixXd fcm_centers(const Eigen::MatrixXd& points, const Eigen::MatrixXd& memberships,
                            double fuzzifier);

/// Alternating optimization from k-means++ seeded centres; best of restarts.
FuzzyAssignment fuzzy_cmeans(const Eigen::MatrixXd& points, const FcmOptions& options);

struct ModalAssignment {
  std::vector<int> labels;           ///< 0-based; ties go to the lowest cluster
  Eigen::VectorXd probabilities;     ///< modal membership per sample
};

ModalAssignment modal_assignment(const Eigen::MatrixXd& memberships);

/// Flags samples whose modal probability is more than one (N-1) standard
/// deviation below the mean modal probability.
std::vector<bool> low_confidence_mask(const Eigen::VectorXd& modal_probabilities);

}  // namespace imkc
