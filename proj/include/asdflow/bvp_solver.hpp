#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "asdflow/lagrangians.hpp"

namespace asdflow {

/// Uniform grid on [0, T] with N steps (N + 1 nodes), trapezoid-midpoint
/// scheme: midpoint states with forward-difference velocities.
struct PathDiscretization {
  double horizon = 1.0;  // T
  int steps = 2;         // N

  double h() const { return horizon / steps; }
};

/// State values on the grid nodes, one column per node; derivative and
/// midpoint views are recomputed, never stored.
struct DiscretePath {
  double horizon = 1.0;
  Matrix values;  // n x (N+1)

  Eigen::Index dim() const { return values.rows(); }
  int steps() const { return static_cast<int>(values.cols()) - 1; }
  double h() const { return horizon / steps(); }
  /// Forward differences d_k = (x_{k+1} - x_k)/h, n x N.
  Matrix derivative() const;
  /// Midpoints (x_k + x_{k+1})/2, n x N.
  Matrix midpoints() const;
};

/// Boundary term of the action.
struct FixedEndpoints {  // l == 0, endpoints pinned
  Vector start;
  Vector finish;
};
struct FlowInitial {  // initial-value form: 1/2|a|^2 - 2<a,x0> + |x0|^2 + 1/2|b|^2
  Vector x0;
};
struct PairBoundary {  // selfdual boundary form on R^{2n} endpoints
  BoundaryLagrangian bl;
};
using BoundaryCondition = std::variant<FixedEndpoints, FlowInitial, PairBoundary>;

struct ActionProblem {
  LagrangianSpec lag;
  BoundaryCondition bc;
  PathDiscretization disc;
};

struct SolveOptions {
  long max_iterations = 1'000'000;
  /// Target for the discrete action; < 0 means the calibrated default
  /// eps(h) = kActionC0 * h.
  double action_tol = -1.0;
  double mu_init = 1e-1;
  double mu_min = 1e-5;
};

/// Calibrated constant of the zero-infimum acceptance threshold eps(h) = C0*h.
inline constexpr double kActionC0 = 0.5;

struct SolveReport {
  double action_value = 0.0;
  double max_inclusion_residual = 0.0;
  std::pair<double, double> boundary_residuals{0.0, 0.0};
  long iterations = 0;
  bool converged = false;
  std::optional<double> refinement_slope;
  bool saturated = false;  // all refinement levels already at tolerance floor
};

/// I(path) = h * sum_k L(xbar_k, d_k) + l(x_0, x_N); +infinity off-domain.
ExtReal assemble_action(const ActionProblem& prob, const DiscretePath& path);

/// Accelerated proximal-gradient descent on the mu-Moreau-smoothed action
/// with mu-continuation; deterministic start (constant path, or the
/// boundary-aware start for pair boundaries).
std::pair<DiscretePath, SolveReport> minimize_action(const ActionProblem& prob,
                                                     const SolveOptions& opts = {});
std::pair<DiscretePath, SolveReport> minimize_action(const ActionProblem& prob,
                                                     const SolveOptions& opts,
                                                     const DiscretePath& start);

/// Hamiltonian connection: Phi(x1,x2) = phi1(x1) + phi2(x2), swap
/// Lagrangian, selfdual pair boundary. Returns the R^{2n} path split into the two
/// n-dimensional trajectories.
std::pair<std::pair<DiscretePath, DiscretePath>, SolveReport> solve_hamiltonian_connect(
    const ConvexFunction& phi1, const ConvexFunction& phi2, const ConvexFunction& psi1,
    const ConvexFunction& psi2, const LinearMap& a1, const LinearMap& a2,
    const PathDiscretization& disc, const SolveOptions& opts = {});

/// Second-order BVP: xdd in dphi(x) with Robin-type boundary inclusions
/// xd(0) in dpsi1(x(0)) + A1 x(0) and -xd(T) in dpsi2(x(T)) + A2 x(T).
std::pair<DiscretePath, SolveReport> solve_second_order(
    const ConvexFunction& phi, const ConvexFunction& psi1, const ConvexFunction& psi2,
    const LinearMap& a1, const LinearMap& a2, const PathDiscretization& disc,
    const SolveOptions& opts = {});

/// Runs minimize_action on each level (same horizon, increasing N), fits
/// log(action) against log(h); returns the finest-level report with
/// refinement_slope set, or saturated = true when every level is already at
/// the tolerance floor.
SolveReport refine_and_extrapolate(const LagrangianSpec& lag, const BoundaryCondition& bc,
                                   double horizon, const std::vector<int>& levels,
                                   const SolveOptions& opts = {});

}  // namespace asdflow
