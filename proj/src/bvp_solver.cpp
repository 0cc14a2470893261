#include "asdflow/bvp_solver.hpp"

#include <algorithm>
#include <cmath>

#include "asdflow/errors.hpp"

namespace asdflow {

namespace {

Matrix swap_half_rows(const Matrix& m) {
  Eigen::Index n = m.rows() / 2;
  Matrix out(m.rows(), m.cols());
  out.topRows(n) = m.bottomRows(n);
  out.bottomRows(n) = m.topRows(n);
  return out;
}

// Batched value + gradient of phi, exactly when smooth, otherwise through the
// mu-Moreau envelope (mu > 0 required then).
double primal_value_grad(const ConvexFunction& f, const Matrix& xs, double mu, Matrix* g) {
  bool finite = true;
  if (is_smooth(f)) {
    double v = eval_sum(f, xs, &finite);
    *g = grad_batch(f, xs);
    return v;
  }
  Matrix z = prox_batch(f, xs, mu);
  double v = eval_sum(f, z, &finite) + (xs - z).squaredNorm() / (2.0 * mu);
  *g = (xs - z) / mu;
  return v;
}

// Batched value + gradient of phi*, exactly when the conjugate gradient map is
// closed-form, otherwise through the mu-envelope of phi* evaluated with the
// Moreau decomposition (z = prox(phi, v/mu, 1/mu) is the smoothed gradient).
double conj_value_grad(const ConvexFunction& f, const Matrix& vs, double mu, Matrix* g) {
  if (has_conj_grad(f)) {
    bool finite = true;
    double v = conj_eval_sum(f, vs, &finite);
    *g = conj_grad_batch(f, vs);
    return v;
  }
  Matrix z = prox_batch(f, vs / mu, 1.0 / mu);
  bool finite = true;
  double v = (z.cwiseProduct(vs)).sum() - eval_sum(f, z, &finite) -
             0.5 * mu * z.squaredNorm();
  *g = std::move(z);
  return v;
}

bool lagrangian_needs_smoothing(const LagrangianSpec& lag) {
  switch (lag.kind) {
    case LagrangianSpec::Kind::BasicASD:
    case LagrangianSpec::Kind::SwapASD:
      return !is_smooth(lag.phi) || !has_conj_grad(lag.phi);
    case LagrangianSpec::Kind::Regularized:
      return !has_conj_grad(lag.phi);
  }
  return true;
}

bool boundary_needs_smoothing(const BoundaryCondition& bc) {
  if (const auto* pb = std::get_if<PairBoundary>(&bc)) {
    const auto& bl = pb->bl;
    return !is_smooth(bl.psi1t) || !has_conj_grad(bl.psi1t) || !is_smooth(bl.psi2t) ||
           !has_conj_grad(bl.psi2t);
  }
  return false;
}

/// Smoothed discrete action with analytic gradient over the full node matrix.
struct SmoothedAction {
  const ActionProblem* prob;
  double mu;  // > 0 whenever any piece lacks a closed-form gradient

  double operator()(const Matrix& x, Matrix* g) const {
    const auto& lag = prob->lag;
    const double h = prob->disc.h();
    const Eigen::Index cols = x.cols();
    const Eigen::Index nsteps = cols - 1;
    const bool swap = lag.kind == LagrangianSpec::Kind::SwapASD;

    Matrix mid = 0.5 * (x.leftCols(nsteps) + x.rightCols(nsteps));
    Matrix d = (x.rightCols(nsteps) - x.leftCols(nsteps)) / h;
    Matrix v = swap ? Matrix(-swap_half_rows(d)) : Matrix(-d);

    Matrix ga, gb;
    double fa, fb;
    if (lag.kind == LagrangianSpec::Kind::Regularized) {
      Matrix z = prox_batch(lag.phi, mid, lag.lambda);
      bool finite = true;
      fa = eval_sum(lag.phi, z, &finite) + (mid - z).squaredNorm() / (2.0 * lag.lambda);
      ga = (mid - z) / lag.lambda;
      fb = conj_value_grad(lag.phi, v, mu, &gb) + 0.5 * lag.lambda * v.squaredNorm();
      gb += lag.lambda * v;
    } else {
      fa = primal_value_grad(lag.phi, mid, mu, &ga);
      fb = conj_value_grad(lag.phi, v, mu, &gb);
    }

    double value = h * (fa + fb);
    g->setZero(x.rows(), cols);
    g->leftCols(nsteps) += (0.5 * h) * ga;
    g->rightCols(nsteps) += (0.5 * h) * ga;
    Matrix sgb = swap ? swap_half_rows(gb) : std::move(gb);
    g->leftCols(nsteps) += sgb;   // d(h*B(-S d_k))/dx_k
    g->rightCols(nsteps) -= sgb;  // .../dx_{k+1}

    value += boundary(x.col(0), x.col(cols - 1), g);
    if (std::holds_alternative<FixedEndpoints>(prob->bc)) {
      g->col(0).setZero();
      g->col(cols - 1).setZero();
    }
    return value;
  }

 private:
  // Adds the boundary value; accumulates gradients into columns 0 and N of g.
  double boundary(const Vector& a, const Vector& b, Matrix* g) const {
    const Eigen::Index cols = g->cols();
    return std::visit(
        [&](const auto& bc) -> double {
          using T = std::decay_t<decltype(bc)>;
          if constexpr (std::is_same_v<T, FixedEndpoints>) {
            return 0.0;
          } else if constexpr (std::is_same_v<T, FlowInitial>) {
            g->col(0) += a - 2.0 * bc.x0;
            g->col(cols - 1) += b;
            return 0.5 * a.squaredNorm() - 2.0 * a.dot(bc.x0) + bc.x0.squaredNorm() +
                   0.5 * b.squaredNorm();
          } else {
            const BoundaryLagrangian& bl = bc.bl;
            Eigen::Index n = bl.n;
            Vector a1 = a.head(n), a2 = a.tail(n), b1 = b.head(n), b2 = b.tail(n);
            Matrix gp, gc;
            double val = 0.0;
            val += primal_value_grad(bl.psi1t, a1, mu, &gp);
            Vector w1 = -bl.a1_skew * a1 - a2;
            val += conj_value_grad(bl.psi1t, w1, mu, &gc);
            g->col(0).head(n) += Vector(gp) + bl.a1_skew * Vector(gc);
            g->col(0).tail(n) -= Vector(gc);
            val += primal_value_grad(bl.psi2t, b1, mu, &gp);
            Vector w2 = -bl.a2_skew * b1 + b2;
            val += conj_value_grad(bl.psi2t, w2, mu, &gc);
            g->col(cols - 1).head(n) += Vector(gp) + bl.a2_skew * Vector(gc);
            g->col(cols - 1).tail(n) += Vector(gc);
            return val;
          }
        },
        prob->bc);
  }
};

struct StageResult {
  Matrix x;
  double value = 0.0;
  long iterations = 0;
};

// FISTA with backtracking line search and function-value restart.
StageResult fista_stage(const SmoothedAction& obj, Matrix x0, double target,
                        long max_iters) {
  Matrix x = std::move(x0);
  Matrix y = x, g, cand;
  double lip = 1.0;
  double t = 1.0;
  Matrix scratch;
  double fx = obj(x, &scratch);
  long stall = 0;
  long it = 0;
  for (; it < max_iters && fx > target; ++it) {
    double fy = obj(y, &g);
    double fc;
    for (;;) {
      cand = y - g / lip;
      fc = obj(cand, &scratch);
      double quad = fy - g.cwiseProduct(y - cand).sum() +
                    0.5 * lip * (y - cand).squaredNorm();
      if (fc <= quad + 1e-15 * (1.0 + std::abs(fy)) || lip > 1e18) break;
      lip *= 2.0;
    }
    double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (fc > fx) {  // function restart: drop momentum, keep best iterate
      y = x;
      t = 1.0;
      ++stall;
    } else {
      y = cand + ((t - 1.0) / tn) * (cand - x);
      t = tn;
      if (fx - fc <= 1e-15 * (1.0 + std::abs(fc)))
        ++stall;
      else
        stall = 0;
      x = cand;
      fx = fc;
    }
    lip *= 0.97;
    if (stall > 300) break;  // tolerance floor for this smoothing level
  }
  return {std::move(x), fx, it};
}

Matrix initial_path(const ActionProblem& prob) {
  Eigen::Index n = prob.lag.dim();
  int nsteps = prob.disc.steps;
  return std::visit(
      [&](const auto& bc) -> Matrix {
        using T = std::decay_t<decltype(bc)>;
        if constexpr (std::is_same_v<T, FixedEndpoints>) {
          Matrix x(n, nsteps + 1);
          for (int k = 0; k <= nsteps; ++k) {
            double w = static_cast<double>(k) / nsteps;
            x.col(k) = (1.0 - w) * bc.start + w * bc.finish;
          }
          return x;
        } else if constexpr (std::is_same_v<T, FlowInitial>) {
          return bc.x0.replicate(1, nsteps + 1);
        } else {
          Vector c(2 * bc.bl.n);
          c.head(bc.bl.n) = prox(bc.bl.psi1t, Vector::Zero(bc.bl.n), 1.0);
          c.tail(bc.bl.n) = prox(bc.bl.psi2t, Vector::Zero(bc.bl.n), 1.0);
          return c.replicate(1, nsteps + 1);
        }
      },
      prob.bc);
}

namespace {

// Certification of a smoothed iterate against the exact nonsmooth problem:
// a point marginally outside dom f is an infinite residual, not an error.
double gap_or_inf(const ConvexFunction& f, const Vector& x, const Vector& p) {
  if (!eval(f, x).finite()) return std::numeric_limits<double>::infinity();
  return fenchel_gap(f, x, p).as_double();
}

}  // namespace

double inclusion_gap(const LagrangianSpec& lag, const Vector& xbar, const Vector& d) {
  switch (lag.kind) {
    case LagrangianSpec::Kind::BasicASD:
      return gap_or_inf(lag.phi, xbar, -d);
    case LagrangianSpec::Kind::SwapASD: {
      Eigen::Index n = d.size() / 2;
      Vector sd(d.size());
      sd.head(n) = d.tail(n);
      sd.tail(n) = d.head(n);
      return gap_or_inf(lag.phi, xbar, -sd);
    }
    case LagrangianSpec::Kind::Regularized: {
      ExtReal l = eval_lagrangian(lag, xbar, d);
      if (!l.finite()) return std::numeric_limits<double>::infinity();
      return std::max(0.0, l.value() + xbar.dot(d));
    }
  }
  return std::numeric_limits<double>::infinity();
}

std::pair<double, double> boundary_gaps(const BoundaryCondition& bc, const Vector& a,
                                        const Vector& b) {
  return std::visit(
      [&](const auto& c) -> std::pair<double, double> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FixedEndpoints>) {
          return {0.0, 0.0};
        } else if constexpr (std::is_same_v<T, FlowInitial>) {
          return {(a - c.x0).squaredNorm(), 0.0};
        } else {
          Eigen::Index n = c.bl.n;
          double r1 =
              gap_or_inf(c.bl.psi1t, a.head(n), -c.bl.a1_skew * a.head(n) - a.tail(n));
          double r2 =
              gap_or_inf(c.bl.psi2t, b.head(n), -c.bl.a2_skew * b.head(n) + b.tail(n));
          return {r1, r2};
        }
      },
      bc);
}

}  // namespace

Matrix DiscretePath::derivative() const {
  Eigen::Index nsteps = values.cols() - 1;
  return (values.rightCols(nsteps) - values.leftCols(nsteps)) / h();
}

Matrix DiscretePath::midpoints() const {
  Eigen::Index nsteps = values.cols() - 1;
  return 0.5 * (values.rightCols(nsteps) + values.leftCols(nsteps));
}

ExtReal assemble_action(const ActionProblem& prob, const DiscretePath& path) {
  if (path.dim() != prob.lag.dim())
    throw DimensionError("assemble_action: path dimension does not match the Lagrangian");
  if (path.steps() != prob.disc.steps)
    throw DimensionError("assemble_action: path grid does not match the discretization");
  const double h = prob.disc.h();
  Matrix mid = path.midpoints();
  Matrix d = path.derivative();
  ExtReal total = 0.0;
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    total += eval_lagrangian(prob.lag, mid.col(k), d.col(k));
    if (!total.finite()) return total;
  }
  ExtReal integral(h * total.value());
  Vector a = path.values.col(0), b = path.values.col(path.values.cols() - 1);
  ExtReal bval = std::visit(
      [&](const auto& c) -> ExtReal {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, FixedEndpoints>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, FlowInitial>) {
          return 0.5 * a.squaredNorm() - 2.0 * a.dot(c.x0) + c.x0.squaredNorm() +
                 0.5 * b.squaredNorm();
        } else {
          return eval_boundary(c.bl, a, b);
        }
      },
      prob.bc);
  return integral + bval;
}

std::pair<DiscretePath, SolveReport> minimize_action(const ActionProblem& prob,
                                                     const SolveOptions& opts) {
  DiscretePath start{prob.disc.horizon, initial_path(prob)};
  return minimize_action(prob, opts, start);
}

std::pair<DiscretePath, SolveReport> minimize_action(const ActionProblem& prob,
                                                     const SolveOptions& opts,
                                                     const DiscretePath& start) {
  const double h = prob.disc.h();
  const double target = opts.action_tol >= 0 ? opts.action_tol : kActionC0 * h;
  const bool smooth_needed =
      lagrangian_needs_smoothing(prob.lag) || boundary_needs_smoothing(prob.bc);

  std::vector<double> stages;
  if (smooth_needed) {
    for (double mu = opts.mu_init; mu > opts.mu_min; mu *= 0.5) stages.push_back(mu);
    stages.push_back(opts.mu_min);
  } else {
    stages.push_back(0.0);
  }

  Matrix x = start.values;
  if (auto* fe = std::get_if<FixedEndpoints>(&prob.bc)) {
    x.col(0) = fe->start;
    x.col(x.cols() - 1) = fe->finish;
  }
  long total_iters = 0;
  double smoothed_value = 0.0;
  for (double mu : stages) {
    SmoothedAction obj{&prob, mu};
    long budget = std::max<long>(1, opts.max_iterations - total_iters);
    StageResult res = fista_stage(obj, std::move(x), target, budget);
    x = std::move(res.x);
    smoothed_value = res.value;
    total_iters += res.iterations;
    if (total_iters >= opts.max_iterations) break;
  }

  DiscretePath path{prob.disc.horizon, std::move(x)};
  SolveReport report;
  report.iterations = total_iters;
  ExtReal true_action = assemble_action(prob, path);
  report.action_value = true_action.finite() ? true_action.value() : smoothed_value;
  report.converged = report.action_value <= target * (1.0 + 1e-9) + 1e-12;

  Matrix mid = path.midpoints();
  Matrix d = path.derivative();
  double max_gap = 0.0;
  for (Eigen::Index k = 0; k < d.cols(); ++k)
    max_gap = std::max(max_gap, inclusion_gap(prob.lag, mid.col(k), d.col(k)));
  report.max_inclusion_residual = max_gap;
  report.boundary_residuals =
      boundary_gaps(prob.bc, path.values.col(0), path.values.col(path.values.cols() - 1));
  return {std::move(path), report};
}

std::pair<std::pair<DiscretePath, DiscretePath>, SolveReport> solve_hamiltonian_connect(
    const ConvexFunction& phi1, const ConvexFunction& phi2, const ConvexFunction& psi1,
    const ConvexFunction& psi2, const LinearMap& a1, const LinearMap& a2,
    const PathDiscretization& disc, const SolveOptions& opts) {
  if (phi1.dim() != phi2.dim() || phi1.dim() != psi1.dim() || phi1.dim() != psi2.dim())
    throw DimensionError("solve_hamiltonian_connect: all convex data must share one dimension");
  ActionProblem prob{build_swap_asd(stack(phi1, phi2)),
                     PairBoundary{build_boundary(psi1, psi2, a1, a2)}, disc};
  auto [path, report] = minimize_action(prob, opts);
  Eigen::Index n = phi1.dim();
  DiscretePath x1{path.horizon, path.values.topRows(n)};
  DiscretePath x2{path.horizon, path.values.bottomRows(n)};
  return {{std::move(x1), std::move(x2)}, report};
}

std::pair<DiscretePath, SolveReport> solve_second_order(
    const ConvexFunction& phi, const ConvexFunction& psi1, const ConvexFunction& psi2,
    const LinearMap& a1, const LinearMap& a2, const PathDiscretization& disc,
    const SolveOptions& opts) {
  // Phi(x1, x2) = phi(x1) + 1/2|x2|^2 gives -xd2 in dphi(x1) and x2 = -xd1,
  // so the returned first component satisfies xdd in dphi(x).
  auto [paths, report] = solve_hamiltonian_connect(phi, norm_squared(phi.dim()), psi1,
                                                   psi2, a1, a2, disc, opts);
  const DiscretePath& x = paths.first;
  const double h = x.h();
  double max_gap = report.max_inclusion_residual;
  for (int k = 1; k < x.steps(); ++k) {
    Vector dd =
        (x.values.col(k + 1) - 2.0 * x.values.col(k) + x.values.col(k - 1)) / (h * h);
    max_gap = std::max(max_gap, gap_or_inf(phi, x.values.col(k), dd));
  }
  report.max_inclusion_residual = max_gap;
  return {paths.first, report};
}

SolveReport refine_and_extrapolate(const LagrangianSpec& lag, const BoundaryCondition& bc,
                                   double horizon, const std::vector<int>& levels,
                                   const SolveOptions& opts) {
  if (levels.size() < 3)
    throw DomainError("refine_and_extrapolate: need at least three refinement levels");
  std::vector<double> log_h, log_a;
  SolveReport finest;
  constexpr double kFloor = 1e-12;
  for (int nsteps : levels) {
    ActionProblem prob{lag, bc, PathDiscretization{horizon, nsteps}};
    auto [path, report] = minimize_action(prob, opts);
    if (!report.converged) {
      report.refinement_slope.reset();
      return report;
    }
    if (report.action_value > kFloor) {
      log_h.push_back(std::log(horizon / nsteps));
      log_a.push_back(std::log(report.action_value));
    }
    finest = report;
  }
  if (log_h.size() < 2) {
    finest.saturated = true;
    finest.refinement_slope.reset();
    return finest;
  }
  double mh = 0.0, ma = 0.0;
  for (size_t i = 0; i < log_h.size(); ++i) {
    mh += log_h[i];
    ma += log_a[i];
  }
  mh /= log_h.size();
  ma /= log_a.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < log_h.size(); ++i) {
    num += (log_h[i] - mh) * (log_a[i] - ma);
    den += (log_h[i] - mh) * (log_h[i] - mh);
  }
  finest.refinement_slope = num / den;
  return finest;
}

}  // namespace asdflow
