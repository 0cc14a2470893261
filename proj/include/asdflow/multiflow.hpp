#pragma once

#include <utility>
#include <vector>

#include "asdflow/bvp_solver.hpp"

namespace asdflow {

/// State values on a [0,S] x [0,T] grid; column i*(N+1)+k holds the value at
/// (s_i, t_k) = (i*S/M, k*T/N).
struct SurfaceGrid {
  double s_horizon = 1.0;
  double t_horizon = 1.0;
  int m = 2;  // steps in s
  int n_steps = 2;  // steps in t
  Matrix values;  // dim x (M+1)(N+1)

  Eigen::Index dim() const { return values.rows(); }
  double hs() const { return s_horizon / m; }
  double ht() const { return t_horizon / n_steps; }
  Eigen::Index col(int i, int k) const {
    return static_cast<Eigen::Index>(i) * (n_steps + 1) + k;
  }
  Vector at(int i, int k) const { return values.col(col(i, k)); }
  /// Bilinear interpolation; throws CoverageError outside [0,S] x [0,T].
  Vector sample(double s, double t) const;
};

/// P-parameter generalization on prod_j [0, T_j]; mixed-radix column index
/// with the last axis fastest.
struct TensorField {
  std::vector<double> horizons;  // T_j
  std::vector<int> steps;        // M_j
  Matrix values;                 // dim x prod_j (M_j + 1)

  Eigen::Index dim() const { return values.rows(); }
  int order() const { return static_cast<int>(horizons.size()); }
  Eigen::Index col(const std::vector<int>& idx) const;
  Vector at(const std::vector<int>& idx) const { return values.col(col(idx)); }
  /// Multilinear interpolation; throws CoverageError outside the box.
  Vector sample(const std::vector<double>& coords) const;
};

struct FlowProblem {
  ConvexFunction phi;
  Vector x0;
  std::vector<double> horizons;  // one per parameter
  std::vector<double> lambda_schedule{1e-1, 1e-2, 1e-3, 1e-4};
};

/// Certificate of x0 in Dom_1(dL): -p0 in dphi(x0) with its Fenchel-gap
/// residual.
struct P0Certificate {
  Vector p0;
  double residual = 0.0;
};

struct MultiflowReport {
  /// Discrete vanishing-action value (interior Fenchel-gap integral; the
  /// boundary integrals vanish exactly by construction).
  double action_value = 0.0;
  double max_inclusion_residual = 0.0;
  double boundary_residual = 0.0;  // max defect over the t_j = 0 faces
  bool converged = false;
  /// sup distance between consecutive lambda-level solutions.
  std::vector<double> lambda_gaps;
  P0Certificate cert;
};

/// Regularized Lagrangian: Moreau envelope in x plus the lambda/2 momentum quadratic;
/// anti-selfdual for every lambda > 0.
LagrangianSpec lambda_regularize(const LagrangianSpec& lag, double lambda);

/// J_lambda = prox(phi, x, lambda) with an inclusion post-check.
Vector resolvent(const ConvexFunction& phi, const Vector& x, double lambda);

/// |(x0 - J_lambda(x0))/lambda|, bounded by |p0| for every lambda > 0.
double y_lambda_norm(const ConvexFunction& phi, const Vector& x0, double lambda);

P0Certificate compute_p0(const ConvexFunction& phi, const Vector& x0);

/// Two-parameter flow: diagonal characteristics with implicit resolvent substeps,
/// lambda-continuation down the schedule.
std::pair<SurfaceGrid, MultiflowReport> solve_two_param(const FlowProblem& prob, int m,
                                                        int n_steps);

/// P-parameter flow (P <= 4); refuses grids above the 2^31-byte budget.
std::pair<TensorField, MultiflowReport> solve_n_param(const FlowProblem& prob,
                                                      const std::vector<int>& steps);

struct EstimateReport {
  double p0_norm = 0.0;
  double energy = 0.0;          // discrete integral of |ds x|^2 + |dt x|^2
  double energy_bound = 0.0;    // 2 T S |p0|^2 * slack
  bool energy_ok = false;
  double edge_max = 0.0;        // max |(ds + dt) x| on the zero faces
  double edge_bound = 0.0;      // 2 |p0| * slack
  bool edge_ok = false;
  double slack = 1.1;
};

/// A-priori energy and edge estimates with multiplicative slack.
EstimateReport verify_estimates(const SurfaceGrid& grid, const P0Certificate& cert,
                                double slack = 1.1);

/// Time-sum lift v(s',t') = u((s'+t')/2) of a one-parameter flow;
/// returns the max Fenchel-gap residual of the two-parameter inclusion on an
/// (m x n) evaluation grid.
double check_time_sum_lift(const ConvexFunction& phi, const DiscretePath& u, int m,
                           int n_steps);

/// Wedge transform v(s',t') = u(s', (1-C)s' + C t') for C in (0, 1].
double check_wedge_transform(const ConvexFunction& phi, const SurfaceGrid& u, double c);

/// Averaging map v(r',s',t') = u((s'+r')/2, (t'+r')/2, (s'+t')/2) on a
/// three-parameter solution.
double check_average_transform(const ConvexFunction& phi, const TensorField& u);

}  // namespace asdflow
