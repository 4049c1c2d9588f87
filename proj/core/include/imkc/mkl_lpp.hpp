#pragma once

#include "imkc/kernel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace imkc {

/// Symmetric k-nearest-neighbour adjacency and its degree vector.
struct NeighborhoodGraph {
  Eigen::MatrixXd weights;  ///< 0/1, zero diagonal
  Eigen::VectorXd degree;   ///< row sums of weights
  int k = 0;

  Eigen::MatrixXd laplacian() const;
};

/// w_ij = 1 when i is among the k nearest neighbours of j or vice versa.
/// Distances are the feature-space distances of `ensemble`; ties in distance
/// resolve toward the lower sample index.
NeighborhoodGraph build_graph(const Eigen::MatrixXd& ensemble, int k);

/// Graph over the uniform-weight ensemble of `kernels`.
NeighborhoodGraph build_graph(const KernelSet& kernels, int k);

struct MklLppOptions {
  int dimensions = 5;
  int max_sweeps = 50;
  double tol = 1e-6;          ///< relative objective change between sweeps
  double ridge_scale = 1e-8;  ///< ridge = ridge_scale * trace(K D K) / N at uniform weights
  double rank_tol = 1e-10;    ///< ensemble eigenvalues below rank_tol * max are treated as zero
  double beta_tol = 1e-8;     ///< projected-gradient step tolerance in the weight step
  int beta_max_iter = 1000;
};

enum class HalfStep { Projection, Weights };

struct TraceEntry {
  int sweep = 0;
  HalfStep step = HalfStep::Projection;
  double objective = 0.0;
};

/// Learned kernel weights, projection and embedding.
///
/// The optimized objective is
///   F(A, beta) = sum_ij w_ij ||A^T K(i) beta - A^T K(j) beta||^2 + ridge * ||A||_F^2
/// with A normalized so that A^T (K D K) A = I, where K = sum_m beta_m K_m.
/// The scale constraint therefore holds with const = dimensions.
struct ProjectionModel {
  Eigen::VectorXd beta;
  Eigen::MatrixXd projection;   ///< N x p, columns alpha_1..alpha_p
  Eigen::MatrixXd embedding;    ///< N x p, row i = A^T K[:, i]
  Eigen::VectorXd eigenvalues;  ///< ascending, from the last projection step
  std::vector<TraceEntry> trace;
  double ridge = 0.0;
  double objective = 0.0;       ///< F at the returned solution
  double locality_cost = 0.0;   ///< F without the ridge term
  int dimensions = 0;
  int sweeps = 0;
  bool converged = false;

  /// Objective after the projection step of every sweep.
  std::vector<double> sweep_objectives() const;
};

struct ProjectionStep {
  Eigen::MatrixXd projection;
  Eigen::VectorXd eigenvalues;
  double objective = 0.0;
};

/// Exact minimizer of F over A for fixed ensemble: the generalized eigenvectors
/// of (2 K L K + ridge I, K D K) restricted to the range of K, smallest first.
ProjectionStep solve_projection(const Eigen::MatrixXd& ensemble, const NeighborhoodGraph& graph,
                                int dimensions, double ridge, double rank_tol = 1e-10);

/// Weight step with A held fixed up to an invertible re-mixing of its columns.
///
/// For weights beta the best re-mixing of A gives
///   g(beta) = tr( B(beta)^{-1} (S(beta) + ridge A^T A) ),
///   S(beta) = sum_{m,m'} beta_m beta_m' 2 A^T K_m L K_m' A,
///   B(beta) = sum_{m,m'} beta_m beta_m' A^T K_m D K_m' A,
/// so g(beta_old) equals the current objective and any decrease of g is a
/// decrease of F.
class WeightStep {
 public:
  WeightStep(const KernelSet& kernels, const NeighborhoodGraph& graph,
             const Eigen::MatrixXd& projection, double ridge);

  /// g(beta); +infinity where B(beta) is not positive definite.
  double objective(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const;

  /// Projected gradient descent on the simplex from several starting points
  /// (always including `start`); never returns a point worse than `start`.
  Eigen::VectorXd minimize(const Eigen::VectorXd& start, double step_tol, int max_iter) const;

  /// Re-mixes A's columns so they are B(beta)-orthonormal and sorted by
  /// ascending generalized eigenvalue; returns the new projection.
  ProjectionStep remix(const Eigen::VectorXd& beta) const;

 private:
  Eigen::Index kernels_ = 0;
  Eigen::Index dims_ = 0;
  Eigen::MatrixXd projection_;
  std::vector<Eigen::MatrixXd> smooth_;  ///< S blocks, index m * M + m'
  std::vector<Eigen::MatrixXd> scale_;   ///< B blocks
  Eigen::MatrixXd ridge_term_;

  void assemble(const Eigen::VectorXd& beta, Eigen::MatrixXd& s, Eigen::MatrixXd& b) const;
  Eigen::VectorXd descend(Eigen::VectorXd beta, double step_tol, int max_iter) const;
};

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Coordinate descent over projection and kernel weights, starting from
/// uniform weights on a graph held fixed for the whole run.
ProjectionModel optimize(const KernelSet& kernels, const NeighborhoodGraph& graph,
                         const MklLppOptions& options = {});

}  // namespace imkc
