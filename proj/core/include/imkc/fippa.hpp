#pragma once

#include "imkc/dataset.hpp"
#include "imkc/feature_cluster.hpp"
#include "imkc/kernel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace imkc {

/// Default guard on |K_ensemble[i, j]| below which a pair is left out.
inline constexpr double kPairEpsilon = 1e-10;

/// Impact scores for C patient clusters (rows) and M kernels (columns).
///
/// Pairs (i, j) whose ensemble entry is within epsilon of zero are skipped;
/// the sum is then normalized by the retained pair count instead of the full
/// one. `skipped` holds the ordered-pair count left out for each cluster.
struct ImpactScores {
  Eigen::MatrixXd scores;
  std::vector<std::size_t> skipped;
};

/// Hard-cluster impact: (1/|c|^2) sum_{i,j in c} beta_m K_m[i,j] / K[i,j].
/// `labels` are 0-based and every cluster in [0, clusters) must be non-empty.
ImpactScores fippa_hard(const KernelSet& kernels, const Eigen::VectorXd& beta,
                        const std::vector<int>& labels, int clusters, double epsilon = kPairEpsilon);

/// Fuzzy impact: (1/N^2) sum_{i,j} p_c(i) p_c(j) beta_m K_m[i,j] / K[i,j],
/// one row per membership column.
ImpactScores ffippa(const KernelSet& kernels, const Eigen::VectorXd& beta,
                    const Eigen::MatrixXd& memberships, double epsilon = kPairEpsilon);

struct SignedImpact {
  ImpactScores plus;   ///< joint probability on positive kernel parts
  ImpactScores minus;  ///< exclusive-or probability on negative kernel parts
};

/// p(x_i xor x_j) = p_i + p_j - 2 p_i p_j.
inline double exclusive_or(double p, double q) { return p + q - 2.0 * p * q; }

/// Signed fuzzy impact using K+ = sum beta_m max(K_m, 0) and
/// K- = sum beta_m min(K_m, 0). Requires centered kernels.
SignedImpact ffippa_signed(const KernelSet& kernels, const Eigen::VectorXd& beta,
                           const Eigen::MatrixXd& memberships, double epsilon = kPairEpsilon);

/// All four score tables for one fitted model.
struct FippaReport {
  ImpactScores fippa;
  ImpactScores ffippa;
  ImpactScores ffippa_plus;
  ImpactScores ffippa_minus;

  int clusters() const { return static_cast<int>(ffippa.scores.rows()); }
  int kernels() const { return static_cast<int>(ffippa.scores.cols()); }
};

/// Hard scores use the modal labels of `memberships`. Clusters without any
/// modal member get a zero FIPPA row with every pair counted as skipped.
FippaReport compute_report(const KernelSet& kernels, const Eigen::VectorXd& beta,
                           const Eigen::MatrixXd& memberships, double epsilon = kPairEpsilon);

/// Indices whose score is strictly above the row mean.
std::vector<std::size_t> above_average(const Eigen::RowVectorXd& scores);

struct HighImpact {
  std::vector<std::size_t> similarity;     ///< kernels with fFIPPA+ above the mean
  std::vector<std::size_t> dissimilarity;  ///< kernels with fFIPPA- above the mean
};

HighImpact select_high_impact(const FippaReport& report, int cluster);

enum class Direction { Over, Under };

struct HomogeneousFeature {
  Eigen::Index column = 0;
  Direction direction = Direction::Over;
  int score = 0;  ///< cluster samples on the majority side
  bool kept = false;
};

struct HomogeneityResult {
  std::vector<HomogeneousFeature> features;
  double mean_score = 0.0;
};

/// A sample is "over" when its value exceeds the cohort median of the
/// feature. The direction is the majority side within the cluster (ties count
/// as over) and features whose score beats the mean score are kept.
HomogeneityResult homogeneity_filter(const View& view, const std::vector<Eigen::Index>& feature_columns,
                                     const std::vector<Eigen::Index>& cluster_samples);

/// Feature list membership:
///   'a' over, high intra-cluster similarity   'b' under, similarity
///   'c' over, high inter-cluster dissimilarity 'd' under, dissimilarity
struct FeatureListEntry {
  int cluster = 0;  ///< 0-based patient cluster
  char list = 'a';
  std::string feature_id;
  std::string view;
  Direction direction = Direction::Over;
  int score = 0;
  std::size_t kernel = 0;
};

/// Runs the high-impact selection and homogeneity filtering for every
/// cluster. Kernel provenance must name views and feature clusters present in
/// `dataset` and `clusterings`.
std::vector<FeatureListEntry> build_feature_lists(const MultiViewDataset& dataset,
                                                  const std::vector<FeatureClustering>& clusterings,
                                                  const KernelSet& kernels, const FippaReport& report,
                                                  const std::vector<int>& labels);

}  // namespace imkc
