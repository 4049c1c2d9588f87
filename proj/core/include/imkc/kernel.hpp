#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace imkc {

/// Where a kernel came from. `feature_cluster` is 0-based.
struct KernelProvenance {
  std::string view_name;
  int feature_cluster = -1;
  double gamma = 0.0;
  double gamma_factor = 1.0;
  bool centered = false;
};

/// N x N sample similarity matrix plus its provenance.
struct KernelMatrix {
  Eigen::MatrixXd values;
  KernelProvenance provenance;

  Eigen::Index size() const { return values.rows(); }
};

/// M kernels over the same ordered samples. Downstream stages expect every
/// member to be centered.
struct KernelSet {
  std::vector<KernelMatrix> kernels;

  std::size_t size() const { return kernels.size(); }
  Eigen::Index samples() const { return kernels.empty() ? 0 : kernels.front().size(); }

  /// Sum_m beta_m K_m.
  Eigen::MatrixXd ensemble(const Eigen::VectorXd& beta) const;
  /// Throws DataError if empty, ragged, or containing an uncentered kernel.
  void validate() const;
};

/// Width rule of thumb 1 / (2 d^2) for a feature set of size d.
double rule_of_thumb_gamma(Eigen::Index features);

/// exp(-gamma * ||x_i - x_j||^2) over the rows of `points`.
KernelMatrix rbf_kernel(const Eigen::MatrixXd& points, double gamma);

/// Double centering in feature space: H K H with H = I - 11^T / N.
KernelMatrix center_kernel(const KernelMatrix& kernel);
Eigen::MatrixXd center_kernel(const Eigen::MatrixXd& kernel);

/// Fraction of the trace carried by the `components` largest eigenvalues.
/// Returns 0 when the trace vanishes.
double leading_variance_fraction(const Eigen::MatrixXd& centered, int components);

struct KernelSelection {
  KernelMatrix kernel;                 ///< the winning candidate, centered
  std::vector<double> factors;         ///< candidate multipliers in input order
  std::vector<double> variance_fraction;
  std::size_t chosen = 0;              ///< index into factors
};

/// Builds one centered Gaussian kernel per width factor around the rule of
/// thumb and keeps the one whose leading `components` kernel principal
/// components explain the largest share of variance. Near-ties (within 1e-9)
/// resolve toward the factor closest to 1.
KernelSelection select_kernel(const Eigen::MatrixXd& points, std::span<const double> factors,
                              int components);

/// Elementwise positive and negative parts of a centered kernel.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_pos_neg(const KernelMatrix& centered);

}  // namespace imkc
