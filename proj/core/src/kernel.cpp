#include "imkc/kernel.hpp"

#include "imkc/error.hpp"

#include <algorithm>
#include <cmath>

namespace imkc {

Eigen::MatrixXd KernelSet::ensemble(const Eigen::VectorXd& beta) const {
  if (static_cast<std::size_t>(beta.size()) != kernels.size()) {
    throw DataError("kernel weight vector has " + std::to_string(beta.size()) + " entries for " +
                    std::to_string(kernels.size()) + " kernels");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(samples(), samples());
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    out.noalias() += beta(static_cast<Eigen::Index>(m)) * kernels[m].values;
  }
  return out;
}

void KernelSet::validate() const {
  if (kernels.empty()) throw DataError("kernel set is empty");
  const auto n = samples();
  for (const auto& k : kernels) {
    if (k.values.rows() != n || k.values.cols() != n) throw DataError("kernel set has ragged sizes");
    if (!k.provenance.centered) throw DataError("kernel set contains an uncentered kernel");
  }
}

double rule_of_thumb_gamma(Eigen::Index features) {
  if (features < 1) throw ConfigError("rule-of-thumb width needs at least one feature");
  const double d = static_cast<double>(features);
  return 1.0 / (2.0 * d * d);
}

KernelMatrix rbf_kernel(const Eigen::MatrixXd& points, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("Gaussian kernel width must be positive");
  if (points.cols() < 1) throw ConfigError("Gaussian kernel needs at least one feature");
  const auto n = points.rows();
  KernelMatrix out;
  out.values.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-gamma * (points.row(i) - points.row(j)).squaredNorm());
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  out.provenance.gamma = gamma;
  return out;
}

Eigen::MatrixXd center_kernel(const Eigen::MatrixXd& kernel) {
  const Eigen::VectorXd row_mean = kernel.rowwise().mean();
  const Eigen::RowVectorXd col_mean = kernel.colwise().mean();
  const double grand = kernel.mean();
  Eigen::MatrixXd out = kernel;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean;
  out.array() += grand;
  // Average with the transpose so rounding never breaks symmetry.
  return 0.5 * (out + out.transpose());
}

KernelMatrix center_kernel(const KernelMatrix& kernel) {
  KernelMatrix out{center_kernel(kernel.values), kernel.provenance};
  out.provenance.centered = true;
  return out;
}

double leading_variance_fraction(const Eigen::MatrixXd& centered, int components) {
  if (components < 1) throw ConfigError("variance fraction needs at least one component");
  const double trace = centered.trace();
  if (!(trace > 0.0)) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("kernel eigendecomposition failed");
  const auto& ev = solver.eigenvalues();  // ascending
  const auto take = std::min<Eigen::Index>(components, ev.size());
  return ev.tail(take).sum() / trace;
}

KernelSelection select_kernel(const Eigen::MatrixXd& points, std::span<const double> factors,
                              int components) {
  if (factors.empty()) throw ConfigError("kernel selection needs at least one width factor");
  const double base = rule_of_thumb_gamma(points.cols());

  KernelSelection sel;
  sel.factors.assign(factors.begin(), factors.end());
  std::vector<KernelMatrix> candidates;
  for (const double f : factors) {
    if (!(f > 0.0)) throw ConfigError("kernel width factors must be positive");
    KernelMatrix k = center_kernel(rbf_kernel(points, base * f));
    k.provenance.gamma_factor = f;
    sel.variance_fraction.push_back(leading_variance_fraction(k.values, components));
    candidates.push_back(std::move(k));
  }

  constexpr double kTie = 1e-9;
  std::vector<std::size_t> valid;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (candidates[c].values.trace() > 0.0) valid.push_back(c);
  }
  if (valid.empty()) throw NumericalError("every candidate kernel is constant after centering");
  double best = -1.0;
  for (const auto c : valid) best = std::max(best, sel.variance_fraction[c]);
  const auto distance_to_one = [&](std::size_t c) { return std::abs(std::log(sel.factors[c])); };
  bool first = true;
  for (const auto c : valid) {
    if (sel.variance_fraction[c] < best - kTie) continue;
    if (first || distance_to_one(c) < distance_to_one(sel.chosen)) sel.chosen = c;
    first = false;
  }
  sel.kernel = std::move(candidates[sel.chosen]);
  return sel;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_pos_neg(const KernelMatrix& centered) {
  if (std::abs(centered.values.mean()) > 1e-6) {
    throw DataError("positive/negative split requires a centered kernel");
  }
  return {centered.values.cwiseMax(0.0), centered.values.cwiseMin(0.0)};
}

}  // namespace imkc
