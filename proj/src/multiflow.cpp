#include "asdflow/multiflow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "asdflow/errors.hpp"

namespace asdflow {

namespace {

constexpr long long kMemoryBudgetBytes = 1LL << 31;
constexpr int kCharacteristicSubsteps = 8;  // substeps per grid step

/// Characteristic value function w(r) tabulated on a uniform fine grid:
/// backward-Euler steps w <- prox(e_lambda phi, w, hf) along the diagonal.
struct CharTable {
  double hf = 1.0;
  std::vector<Vector> w;

  Vector sample(double r) const {
    if (r < -1e-12 || r > hf * (static_cast<double>(w.size()) - 1) + 1e-12)
      throw CoverageError("characteristic table: r = " + std::to_string(r) +
                          " outside the tabulated range");
    double pos = std::clamp(r / hf, 0.0, static_cast<double>(w.size()) - 1);
    auto j = static_cast<size_t>(pos);
    if (j + 1 >= w.size()) return w.back();
    double frac = pos - static_cast<double>(j);
    return (1.0 - frac) * w[j] + frac * w[j + 1];
  }
};

CharTable integrate_characteristic(const ConvexFunction& phi, const Vector& x0,
                                   double lambda, double reach, double hf) {
  ConvexFunction env = moreau_envelope(phi, lambda);
  auto nsteps = static_cast<size_t>(std::ceil(reach / hf - 1e-12));
  CharTable table{hf, {}};
  table.w.reserve(nsteps + 1);
  table.w.push_back(x0);
  for (size_t j = 0; j < nsteps; ++j) table.w.push_back(prox(env, table.w.back(), hf));
  return table;
}

struct CharSolve {
  CharTable table;
  std::vector<double> lambda_gaps;
};

CharSolve solve_characteristics(const FlowProblem& prob, double reach, double grid_step) {
  if (prob.lambda_schedule.empty())
    throw DomainError("flow solve: lambda schedule must be nonempty");
  double hf = grid_step / kCharacteristicSubsteps;
  CharSolve out;
  bool first = true;
  for (double lambda : prob.lambda_schedule) {
    if (lambda <= 0) throw DomainError("flow solve: lambda schedule must be positive");
    CharTable next = integrate_characteristic(prob.phi, prob.x0, lambda, reach, hf);
    if (!first) {
      double gap = 0.0;
      for (size_t j = 0; j < next.w.size(); ++j)
        gap = std::max(gap, (next.w[j] - out.table.w[j]).norm());
      out.lambda_gaps.push_back(gap);
    }
    out.table = std::move(next);
    first = false;
  }
  return out;
}

double diagonal_gap(const ConvexFunction& phi, const Vector& u, const Vector& u_prev,
                    double delta) {
  return fenchel_gap(phi, u, -(u - u_prev) / delta).as_double();
}

}  // namespace

Vector SurfaceGrid::sample(double s, double t) const {
  if (s < -1e-12 || s > s_horizon + 1e-12 || t < -1e-12 || t > t_horizon + 1e-12)
    throw CoverageError("SurfaceGrid::sample: (" + std::to_string(s) + ", " +
                        std::to_string(t) + ") outside [0,S] x [0,T]");
  double si = std::clamp(s / hs(), 0.0, static_cast<double>(m));
  double tk = std::clamp(t / ht(), 0.0, static_cast<double>(n_steps));
  int i = std::min(static_cast<int>(si), m - 1);
  int k = std::min(static_cast<int>(tk), n_steps - 1);
  double a = si - i, b = tk - k;
  return (1 - a) * (1 - b) * at(i, k) + a * (1 - b) * at(i + 1, k) +
         (1 - a) * b * at(i, k + 1) + a * b * at(i + 1, k + 1);
}

Eigen::Index TensorField::col(const std::vector<int>& idx) const {
  Eigen::Index c = 0;
  for (size_t j = 0; j < steps.size(); ++j) c = c * (steps[j] + 1) + idx[j];
  return c;
}

Vector TensorField::sample(const std::vector<double>& coords) const {
  const int p = order();
  std::vector<int> base(p);
  std::vector<double> frac(p);
  for (int j = 0; j < p; ++j) {
    if (coords[j] < -1e-12 || coords[j] > horizons[j] + 1e-12)
      throw CoverageError("TensorField::sample: coordinate " + std::to_string(j) +
                          " = " + std::to_string(coords[j]) + " outside [0, T_j]");
    double h = horizons[j] / steps[j];
    double pos = std::clamp(coords[j] / h, 0.0, static_cast<double>(steps[j]));
    base[j] = std::min(static_cast<int>(pos), steps[j] - 1);
    frac[j] = pos - base[j];
  }
  Vector out = Vector::Zero(dim());
  std::vector<int> idx(p);
  for (int corner = 0; corner < (1 << p); ++corner) {
    double weight = 1.0;
    for (int j = 0; j < p; ++j) {
      bool hi = (corner >> j) & 1;
      idx[j] = base[j] + (hi ? 1 : 0);
      weight *= hi ? frac[j] : 1.0 - frac[j];
    }
    if (weight > 0) out += weight * at(idx);
  }
  return out;
}

LagrangianSpec lambda_regularize(const LagrangianSpec& lag, double lambda) {
  if (lambda <= 0) throw DomainError("lambda_regularize: lambda must be positive");
  if (lag.kind != LagrangianSpec::Kind::BasicASD)
    throw UnsupportedCombinationError(
        "lambda_regularize: only BasicASD Lagrangians are regularized");
  LagrangianSpec out{LagrangianSpec::Kind::Regularized, lag.phi, lambda, lag.r};
  return out;
}

Vector resolvent(const ConvexFunction& phi, const Vector& x, double lambda) {
  Vector j = prox(phi, x, lambda);
  double gap = fenchel_gap(phi, j, (x - j) / lambda).as_double();
  if (!(gap <= 1e-6 * (1.0 + x.norm())))
    throw Error("resolvent: inclusion certificate failed, gap = " + std::to_string(gap));
  return j;
}

double y_lambda_norm(const ConvexFunction& phi, const Vector& x0, double lambda) {
  return (x0 - prox(phi, x0, lambda)).norm() / lambda;
}

P0Certificate compute_p0(const ConvexFunction& phi, const Vector& x0) {
  Vector g = subgrad(phi, x0);
  double residual = fenchel_gap(phi, x0, g).as_double();
  return {-g, residual};
}

std::pair<SurfaceGrid, MultiflowReport> solve_two_param(const FlowProblem& prob, int m,
                                                        int n_steps) {
  if (prob.horizons.size() != 2)
    throw DimensionError("solve_two_param: exactly two horizons required");
  if (m < 2 || n_steps < 2) throw DomainError("solve_two_param: grid must be at least 2x2");
  const double s_hor = prob.horizons[0], t_hor = prob.horizons[1];
  if (s_hor <= 0 || t_hor <= 0) throw DomainError("solve_two_param: horizons must be positive");

  MultiflowReport report;
  report.cert = compute_p0(prob.phi, prob.x0);

  const double hs = s_hor / m, ht = t_hor / n_steps;
  const double delta = std::min(hs, ht);
  CharSolve cs = solve_characteristics(prob, std::min(s_hor, t_hor), delta);
  report.lambda_gaps = std::move(cs.lambda_gaps);

  SurfaceGrid grid{s_hor, t_hor, m, n_steps,
                   Matrix(prob.x0.size(), (m + 1) * (n_steps + 1))};
  for (int i = 0; i <= m; ++i)
    for (int k = 0; k <= n_steps; ++k)
      grid.values.col(grid.col(i, k)) =
          (i == 0 || k == 0) ? prob.x0 : cs.table.sample(std::min(i * hs, k * ht));

  double max_gap = 0.0, action = 0.0;
  for (int i = 1; i <= m; ++i) {
    for (int k = 1; k <= n_steps; ++k) {
      double r = std::min(i * hs, k * ht);
      double gap = diagonal_gap(prob.phi, grid.at(i, k), cs.table.sample(r - delta), delta);
      max_gap = std::max(max_gap, gap);
      action += gap * hs * ht;
    }
  }
  report.max_inclusion_residual = max_gap;
  report.action_value = action;
  report.boundary_residual = 0.0;  // faces carry x0 exactly by construction
  report.converged = true;
  return {std::move(grid), report};
}

std::pair<TensorField, MultiflowReport> solve_n_param(const FlowProblem& prob,
                                                      const std::vector<int>& steps) {
  const int p = static_cast<int>(prob.horizons.size());
  if (p < 1 || p > 4)
    throw DomainError("solve_n_param: supports 1 to 4 parameters");
  if (static_cast<int>(steps.size()) != p)
    throw DimensionError("solve_n_param: one step count per horizon required");

  long long cols = 1;
  for (int j = 0; j < p; ++j) {
    if (steps[j] < 2) throw DomainError("solve_n_param: each axis needs at least 2 steps");
    if (prob.horizons[j] <= 0) throw DomainError("solve_n_param: horizons must be positive");
    cols *= steps[j] + 1;
  }
  long long bytes = cols * prob.x0.size() * static_cast<long long>(sizeof(double));
  if (bytes > kMemoryBudgetBytes)
    throw MemoryBudgetError("solve_n_param: grid requires " + std::to_string(bytes) +
                            " bytes, budget is " + std::to_string(kMemoryBudgetBytes));

  MultiflowReport report;
  report.cert = compute_p0(prob.phi, prob.x0);

  std::vector<double> h(p);
  double min_h = std::numeric_limits<double>::infinity();
  double reach = std::numeric_limits<double>::infinity();
  for (int j = 0; j < p; ++j) {
    h[j] = prob.horizons[j] / steps[j];
    min_h = std::min(min_h, h[j]);
    reach = std::min(reach, prob.horizons[j]);
  }
  CharSolve cs = solve_characteristics(prob, reach, min_h);
  report.lambda_gaps = std::move(cs.lambda_gaps);

  TensorField field{prob.horizons, steps, Matrix(prob.x0.size(), cols)};
  std::vector<int> idx(p, 0);
  double max_gap = 0.0, action = 0.0;
  double cell = std::accumulate(h.begin(), h.end(), 1.0, std::multiplies<>());
  for (Eigen::Index c = 0; c < cols; ++c) {
    double r = std::numeric_limits<double>::infinity();
    bool on_face = false;
    for (int j = 0; j < p; ++j) {
      r = std::min(r, idx[j] * h[j]);
      on_face = on_face || idx[j] == 0;
    }
    field.values.col(c) = on_face ? prob.x0 : cs.table.sample(r);
    if (!on_face) {
      double gap =
          diagonal_gap(prob.phi, field.values.col(c), cs.table.sample(r - min_h), min_h);
      max_gap = std::max(max_gap, gap);
      action += gap * cell;
    }
    // mixed-radix increment, last axis fastest (matches TensorField::col)
    for (int j = p - 1; j >= 0; --j) {
      if (++idx[j] <= steps[j]) break;
      idx[j] = 0;
    }
  }
  report.max_inclusion_residual = max_gap;
  report.action_value = action;
  report.boundary_residual = 0.0;
  report.converged = true;
  return {std::move(field), report};
}

EstimateReport verify_estimates(const SurfaceGrid& grid, const P0Certificate& cert,
                                double slack) {
  EstimateReport rep;
  rep.slack = slack;
  rep.p0_norm = cert.p0.norm();
  const double hs = grid.hs(), ht = grid.ht();
  double energy = 0.0;
  for (int i = 0; i < grid.m; ++i) {
    for (int k = 0; k < grid.n_steps; ++k) {
      double ds = (grid.at(i + 1, k) - grid.at(i, k)).squaredNorm() / (hs * hs);
      double dt = (grid.at(i, k + 1) - grid.at(i, k)).squaredNorm() / (ht * ht);
      energy += (ds + dt) * hs * ht;
    }
  }
  rep.energy = energy;
  rep.energy_bound = 2.0 * grid.s_horizon * grid.t_horizon * rep.p0_norm * rep.p0_norm * slack;
  rep.energy_ok = energy <= rep.energy_bound + 1e-9;

  const double delta = std::min(hs, ht);
  double edge = 0.0;
  for (int k = 0; k < grid.n_steps && grid.m >= 1; ++k)
    edge = std::max(edge, (grid.at(1, k + 1) - grid.at(0, k)).norm() / delta);
  for (int i = 0; i < grid.m; ++i)
    edge = std::max(edge, (grid.at(i + 1, 1) - grid.at(i, 0)).norm() / delta);
  rep.edge_max = edge;
  rep.edge_bound = 2.0 * rep.p0_norm * slack;
  rep.edge_ok = edge <= rep.edge_bound + 1e-9;
  return rep;
}

double check_time_sum_lift(const ConvexFunction& phi, const DiscretePath& u, int m,
                           int n_steps) {
  // Target box [0,T] x [0,T]; v(s',t') = u((s'+t')/2) covers it exactly.
  const double hor = u.horizon;
  const double hs = hor / m, ht = hor / n_steps;
  const double delta = 2.0 * std::min(hs, ht);
  auto path_sample = [&](double t) -> Vector {
    if (t < -1e-12 || t > hor + 1e-12)
      throw CoverageError("check_time_sum_lift: t = " + std::to_string(t) +
                          " outside the source path domain");
    double pos = std::clamp(t / u.h(), 0.0, static_cast<double>(u.steps()));
    int k = std::min(static_cast<int>(pos), u.steps() - 1);
    double frac = pos - k;
    return (1 - frac) * u.values.col(k) + frac * u.values.col(k + 1);
  };
  double max_gap = 0.0;
  for (int i = 0; i + 2 <= m; i += 2) {
    for (int k = 0; k + 2 <= n_steps; k += 2) {
      double arg = 0.5 * (i * hs + k * ht);
      Vector v0 = path_sample(arg);
      Vector v1 = path_sample(arg + delta);
      max_gap = std::max(max_gap, diagonal_gap(phi, v1, v0, delta));
    }
  }
  return max_gap;
}

double check_wedge_transform(const ConvexFunction& phi, const SurfaceGrid& u, double c) {
  if (c <= 0.0 || c > 1.0)
    throw DomainError("check_wedge_transform: C must lie in (0, 1]");
  const double hs = u.hs(), ht = u.ht();
  const double delta = 2.0 * std::min(hs, ht);
  double max_gap = 0.0;
  for (int i = 0; i + 2 <= u.m; i += 2) {
    for (int k = 0; k + 2 <= u.n_steps; k += 2) {
      double s = i * hs, t = k * ht;
      Vector v0 = u.sample(s, (1.0 - c) * s + c * t);
      Vector v1 = u.sample(s + delta, (1.0 - c) * s + c * t + delta);
      max_gap = std::max(max_gap, diagonal_gap(phi, v1, v0, delta));
    }
  }
  return max_gap;
}

double check_average_transform(const ConvexFunction& phi, const TensorField& u) {
  if (u.order() != 3)
    throw DimensionError("check_average_transform: needs a three-parameter solution");
  std::vector<double> h(3);
  double min_h = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; ++j) {
    h[j] = u.horizons[j] / u.steps[j];
    min_h = std::min(min_h, h[j]);
  }
  const double delta = 2.0 * min_h;
  double max_gap = 0.0;
  for (int a = 0; a + 2 <= u.steps[0]; a += 2) {
    for (int b = 0; b + 2 <= u.steps[1]; b += 2) {
      for (int d = 0; d + 2 <= u.steps[2]; d += 2) {
        double r = a * h[0], s = b * h[1], t = d * h[2];
        std::vector<double> z0{0.5 * (s + r), 0.5 * (t + r), 0.5 * (s + t)};
        std::vector<double> z1{z0[0] + delta, z0[1] + delta, z0[2] + delta};
        Vector v0 = u.sample(z0);
        Vector v1 = u.sample(z1);
        max_gap = std::max(max_gap, diagonal_gap(phi, v1, v0, delta));
      }
    }
  }
  return max_gap;
}

}  // namespace asdflow
