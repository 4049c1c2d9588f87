#include "imkc/mkl_lpp.hpp"

#include "imkc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace imkc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Flip each column so its largest-magnitude entry in `reference` is positive.
void fix_signs(Eigen::MatrixXd& columns, const Eigen::MatrixXd& reference) {
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    Eigen::Index arg = 0;
    reference.col(c).cwiseAbs().maxCoeff(&arg);
    if (reference(arg, c) < 0.0) columns.col(c) *= -1.0;
  }
}

// Starting points for the weight step: the incumbent, the barycentre, every
// vertex, and for M <= 3 a lattice of step 0.1.
std::vector<Eigen::VectorXd> weight_starts(const Eigen::VectorXd& incumbent) {
  const auto m = incumbent.size();
  std::vector<Eigen::VectorXd> starts{incumbent, Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m))};
  for (Eigen::Index i = 0; i < m; ++i) starts.push_back(Eigen::VectorXd::Unit(m, i));
  if (m == 2) {
    for (int a = 1; a < 10; ++a) starts.push_back(Eigen::Vector2d(a / 10.0, 1.0 - a / 10.0));
  } else if (m == 3) {
    for (int a = 0; a <= 10; ++a) {
      for (int b = 0; a + b <= 10; ++b) {
        starts.push_back(Eigen::Vector3d(a / 10.0, b / 10.0, (10 - a - b) / 10.0));
      }
    }
  }
  return starts;
}

}  // namespace

Eigen::MatrixXd NeighborhoodGraph::laplacian() const {
  Eigen::MatrixXd l = -weights;
  l.diagonal() += degree;
  return l;
}

NeighborhoodGraph build_graph(const Eigen::MatrixXd& ensemble, int k) {
  const auto n = ensemble.rows();
  if (k < 1 || k > n - 1) {
    throw ConfigError("neighbourhood size k=" + std::to_string(k) + " must lie in [1, " +
                      std::to_string(n - 1) + "]");
  }
  const Eigen::VectorXd diag = ensemble.diagonal();
  NeighborhoodGraph g;
  g.k = k;
  g.weights = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto dist = [&](Eigen::Index i) { return diag(i) + diag(j) - 2.0 * ensemble(i, j); };
    order.erase(order.begin() + j);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return dist(a) < dist(b); });
    for (int r = 0; r < k; ++r) {
      const auto i = order[static_cast<std::size_t>(r)];
      g.weights(i, j) = 1.0;
      g.weights(j, i) = 1.0;
    }
    order.resize(static_cast<std::size_t>(n));
  }
  g.degree = g.weights.rowwise().sum();
  return g;
}

NeighborhoodGraph build_graph(const KernelSet& kernels, int k) {
  kernels.validate();
  const auto m = static_cast<Eigen::Index>(kernels.size());
  return build_graph(kernels.ensemble(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m))), k);
}

std::vector<double> ProjectionModel::sweep_objectives() const {
  std::vector<double> out;
  for (const auto& e : trace) {
    if (e.step == HalfStep::Projection) out.push_back(e.objective);
  }
  return out;
}

ProjectionStep solve_projection(const Eigen::MatrixXd& ensemble, const NeighborhoodGraph& graph,
                                int dimensions, double ridge, double rank_tol) {
  const auto n = ensemble.rows();
  if (graph.weights.rows() != n) throw DataError("graph and kernels disagree on sample count");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectral(ensemble);
  if (spectral.info() != Eigen::Success) throw NumericalError("ensemble kernel eigendecomposition failed");
  const Eigen::VectorXd& sigma = spectral.eigenvalues();
  const double top = sigma.cwiseAbs().maxCoeff();
  const double floor = rank_tol * top;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > floor && sigma(i) > 0.0) kept.push_back(i);
  }
  const auto rank = static_cast<Eigen::Index>(kept.size());
  if (rank < dimensions) {
    throw NumericalError("ensemble kernel rank " + std::to_string(rank) +
                         " is below the projection dimensionality " + std::to_string(dimensions));
  }
  Eigen::MatrixXd basis(n, rank);
  Eigen::VectorXd kept_sigma(rank);
  for (Eigen::Index c = 0; c < rank; ++c) {
    basis.col(c) = spectral.eigenvectors().col(kept[static_cast<std::size_t>(c)]);
    kept_sigma(c) = sigma(kept[static_cast<std::size_t>(c)]);
  }

  // In coordinates c with embedding y = basis * c and a = basis * sigma^{-1} * c.
  const Eigen::MatrixXd lb = graph.laplacian() * basis;
  Eigen::MatrixXd lhs = 2.0 * basis.transpose() * lb;
  lhs.diagonal() += ridge * kept_sigma.cwiseInverse().cwiseAbs2();
  lhs = 0.5 * (lhs + lhs.transpose()).eval();
  Eigen::MatrixXd rhs = basis.transpose() * graph.degree.asDiagonal() * basis;
  rhs = 0.5 * (rhs + rhs.transpose()).eval();

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gen(lhs, rhs);
  if (gen.info() != Eigen::Success) {
    throw NumericalError("generalized eigenproblem failed (degree-side matrix not positive definite)");
  }
  const Eigen::MatrixXd coords = gen.eigenvectors().leftCols(dimensions);

  ProjectionStep out;
  out.eigenvalues = gen.eigenvalues().head(dimensions);
  out.projection = basis * kept_sigma.cwiseInverse().asDiagonal() * coords;
  const Eigen::MatrixXd embedding = basis * coords;
  fix_signs(out.projection, embedding);
  out.objective = out.eigenvalues.sum();
  if (!std::isfinite(out.objective)) throw NumericalError("projection objective is not finite");
  return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const auto m = v.size();
  std::vector<double> sorted(v.data(), v.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
  }
  Eigen::VectorXd out = (v.array() - theta).cwiseMax(0.0);
  const double total = out.sum();
  if (total > 0.0) out /= total;
  return out;
}

WeightStep::WeightStep(const KernelSet& kernels, const NeighborhoodGraph& graph,
                       const Eigen::MatrixXd& projection, double ridge)
    : kernels_(static_cast<Eigen::Index>(kernels.size())),
      dims_(projection.cols()),
      projection_(projection) {
  const Eigen::MatrixXd laplacian = graph.laplacian();
  std::vector<Eigen::MatrixXd> projected;  // A^T K_m, p x N
  projected.reserve(kernels.size());
  for (const auto& k : kernels.kernels) projected.push_back(projection.transpose() * k.values);

  smooth_.resize(static_cast<std::size_t>(kernels_ * kernels_));
  scale_.resize(smooth_.size());
  for (Eigen::Index m = 0; m < kernels_; ++m) {
    const Eigen::MatrixXd pl = projected[static_cast<std::size_t>(m)] * laplacian;
    const Eigen::MatrixXd pd = projected[static_cast<std::size_t>(m)] * graph.degree.asDiagonal();
    for (Eigen::Index q = 0; q < kernels_; ++q) {
      const auto idx = static_cast<std::size_t>(m * kernels_ + q);
      smooth_[idx] = 2.0 * pl * projected[static_cast<std::size_t>(q)].transpose();
      scale_[idx] = pd * projected[static_cast<std::size_t>(q)].transpose();
    }
  }
  ridge_term_ = ridge * projection.transpose() * projection;
}

void WeightStep::assemble(const Eigen::VectorXd& beta, Eigen::MatrixXd& s, Eigen::MatrixXd& b) const {
  s = ridge_term_;
  b = Eigen::MatrixXd::Zero(dims_, dims_);
  for (Eigen::Index m = 0; m < kernels_; ++m) {
    if (beta(m) == 0.0) continue;
    for (Eigen::Index q = 0; q < kernels_; ++q) {
      if (beta(q) == 0.0) continue;
      const double w = beta(m) * beta(q);
      const auto idx = static_cast<std::size_t>(m * kernels_ + q);
      s.noalias() += w * smooth_[idx];
      b.noalias() += w * scale_[idx];
    }
  }
  s = 0.5 * (s + s.transpose()).eval();
  b = 0.5 * (b + b.transpose()).eval();
}

double WeightStep::objective(const Eigen::VectorXd& beta) const {
  Eigen::MatrixXd s, b;
  assemble(beta, s, b);
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) return kInf;
  const double value = llt.solve(s).trace();
  return std::isfinite(value) ? value : kInf;
}

Eigen::VectorXd WeightStep::gradient(const Eigen::VectorXd& beta) const {
  Eigen::MatrixXd s, b;
  assemble(beta, s, b);
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) return Eigen::VectorXd::Zero(kernels_);
  const Eigen::MatrixXd b_inv = llt.solve(Eigen::MatrixXd::Identity(dims_, dims_));
  const Eigen::MatrixXd h = b_inv * s * b_inv;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(kernels_);
  for (Eigen::Index m = 0; m < kernels_; ++m) {
    for (Eigen::Index q = 0; q < kernels_; ++q) {
      const auto idx = static_cast<std::size_t>(m * kernels_ + q);
      // tr(G X) == tr(G X^T) for symmetric G, so both orderings fold together.
      grad(m) += 2.0 * beta(q) *
                 ((b_inv.cwiseProduct(smooth_[idx])).sum() - (h.cwiseProduct(scale_[idx])).sum());
    }
  }
  return grad;
}

Eigen::VectorXd WeightStep::descend(Eigen::VectorXd beta, double step_tol, int max_iter) const {
  double value = objective(beta);
  if (!std::isfinite(value)) return beta;
  double step = 1.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd grad = gradient(beta);
    const double gnorm = grad.cwiseAbs().maxCoeff();
    if (!(gnorm > 0.0)) break;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double candidate_value = value;
    for (int shrink = 0; shrink < 60; ++shrink) {
      candidate = project_to_simplex(beta - (step / gnorm) * grad);
      candidate_value = objective(candidate);
      // Armijo condition along the projection arc.
      if (candidate_value <= value + 1e-4 * grad.dot(candidate - beta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double moved = (candidate - beta).cwiseAbs().maxCoeff();
    beta = candidate;
    value = candidate_value;
    if (moved < step_tol) break;
    step = std::min(step * 2.0, 1.0);
  }
  return beta;
}

Eigen::VectorXd WeightStep::minimize(const Eigen::VectorXd& start, double step_tol, int max_iter) const {
  Eigen::VectorXd best = start;
  double best_value = objective(start);
  const double incumbent = best_value;
  for (const auto& s : weight_starts(start)) {
    Eigen::VectorXd candidate = descend(s, step_tol, max_iter);
    const double value = objective(candidate);
    if (value < best_value) {
      best = std::move(candidate);
      best_value = value;
    }
  }
  // Keep the incumbent unless the improvement is more than rounding noise.
  if (std::isfinite(incumbent) && !(best_value < incumbent - 1e-14 * std::abs(incumbent))) return start;
  return best;
}

ProjectionStep WeightStep::remix(const Eigen::VectorXd& beta) const {
  Eigen::MatrixXd s, b;
  assemble(beta, s, b);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gen(s, b);
  if (gen.info() != Eigen::Success) throw NumericalError("weight step produced a singular scale matrix");
  ProjectionStep out;
  out.projection = projection_ * gen.eigenvectors();
  out.eigenvalues = gen.eigenvalues();
  out.objective = out.eigenvalues.sum();
  if (!std::isfinite(out.objective)) throw NumericalError("weight step objective is not finite");
  return out;
}

ProjectionModel optimize(const KernelSet& kernels, const NeighborhoodGraph& graph,
                         const MklLppOptions& options) {
  kernels.validate();
  const auto n = kernels.samples();
  const auto m = static_cast<Eigen::Index>(kernels.size());
  if (graph.weights.rows() != n) throw DataError("graph and kernels disagree on sample count");
  if (options.dimensions < 1 || options.dimensions > n - 1) {
    throw ConfigError("projection dimensionality p=" + std::to_string(options.dimensions) +
                      " must lie in [1, " + std::to_string(n - 1) + "]");
  }
  if (options.max_sweeps < 1) throw ConfigError("at least one sweep is required");

  ProjectionModel model;
  model.dimensions = options.dimensions;
  model.beta = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));

  {
    const Eigen::MatrixXd ens = kernels.ensemble(model.beta);
    const Eigen::MatrixXd kdk = ens * graph.degree.asDiagonal() * ens;
    model.ridge = options.ridge_scale * kdk.trace() / static_cast<double>(n);
  }

  ProjectionStep current =
      solve_projection(kernels.ensemble(model.beta), graph, options.dimensions, model.ridge, options.rank_tol);
  model.trace.push_back({0, HalfStep::Projection, current.objective});

  if (m > 1) {
    double previous = current.objective;
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
      const WeightStep weights(kernels, graph, current.projection, model.ridge);
      const Eigen::VectorXd beta = weights.minimize(model.beta, options.beta_tol, options.beta_max_iter);
      const ProjectionStep remixed = weights.remix(beta);
      model.beta = beta;
      model.trace.push_back({sweep, HalfStep::Weights, remixed.objective});

      current = solve_projection(kernels.ensemble(model.beta), graph, options.dimensions, model.ridge,
                                 options.rank_tol);
      model.trace.push_back({sweep, HalfStep::Projection, current.objective});
      model.sweeps = sweep;
      const double change = std::abs(previous - current.objective) /
                            std::max(std::abs(current.objective), std::numeric_limits<double>::min());
      previous = current.objective;
      if (change < options.tol) {
        model.converged = true;
        break;
      }
    }
  } else {
    model.converged = true;
  }

  const Eigen::MatrixXd ens = kernels.ensemble(model.beta);
  model.projection = current.projection;
  model.eigenvalues = current.eigenvalues;
  model.embedding = ens * model.projection;
  model.objective = current.objective;
  model.locality_cost = current.objective - model.ridge * model.projection.squaredNorm();
  return model;
}

}  // namespace imkc
