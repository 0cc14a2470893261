#include "asdflow/convex_function.hpp"

#include <algorithm>
#include <cmath>

#include "asdflow/errors.hpp"

namespace asdflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using namespace nodes;

constexpr double kBoxTol = 1e-12;
constexpr double kRangeTol = 1e-9;

Eigen::Index node_dim(const Node& n) {
  return std::visit(
      overloaded{
          [](const Quadratic& q) { return q.q.rows(); },
          [](const NormSquared& s) { return s.dim; },
          [](const AbsSum& a) { return a.weights.size(); },
          [](const IndicatorBox& b) { return b.lo.size(); },
          [](const LinearTilt& t) { return t.base()->dim(); },
          [](const SeparableSum& s) { return s.dim; },
          [](const MoreauEnvelope& m) { return m.base_->dim(); },
          [](const SumWithQuadratic& s) { return s.base_->dim(); },
      },
      n);
}

void check_dim(const ConvexFunction& f, const Vector& x, const char* op) {
  if (x.size() != f.dim())
    throw DimensionError(std::string(op) + ": argument has dimension " +
                         std::to_string(x.size()) + ", function expects " +
                         std::to_string(f.dim()));
}

double spectral_norm(const LinearMap& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<LinearMap> es(s, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()),
                  std::abs(es.eigenvalues().maxCoeff()));
}

// prox for base(z) + 1/2 z^T S z at x: proximal-gradient on the strongly
// convex inner objective, linear rate 1 - tau/lambda.
Vector prox_sum_with_quadratic(const SumWithQuadratic& n, const Vector& x, double lambda) {
  const double tau = 1.0 / (spectral_norm(n.sym) + 1.0 / lambda);
  Vector z = prox(*n.base_, x, lambda);  // warm start ignoring S
  for (int it = 0; it < 100000; ++it) {
    Vector step = z - tau * (n.sym * z + (z - x) / lambda);
    Vector zn = prox(*n.base_, step, tau);
    double move = (zn - z).norm();
    z = std::move(zn);
    if (move <= 1e-14 * (1.0 + z.norm())) break;
  }
  return z;
}

// f*(p) for f = base + 1/2 <Sx, x>: FISTA on m(x) = base(x) + 1/2 x^T S x - <p, x>.
ExtReal conj_sum_with_quadratic(const SumWithQuadratic& n, const Vector& p) {
  const double lip = spectral_norm(n.sym);
  if (lip == 0.0) return conj_eval(*n.base_, p);
  const double tau = 1.0 / lip;
  Vector x = Vector::Zero(p.size());
  Vector y = x;
  double t = 1.0;
  for (int it = 0; it < 500; ++it) {
    Vector xn = prox(*n.base_, y - tau * (n.sym * y - p), tau);
    if (xn.norm() > 1e10) return ExtReal::infinity();
    double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    double move = (xn - x).norm();
    x = std::move(xn);
    t = tn;
    if (move <= 1e-13 * (1.0 + x.norm())) break;
  }
  ExtReal fx = eval(*n.base_, x);
  if (!fx.finite()) return ExtReal::infinity();
  return p.dot(x) - fx.value() - 0.5 * x.dot(n.sym * x);
}

}  // namespace

ConvexFunction::ConvexFunction(nodes::Node node)
    : node_(std::make_shared<const nodes::Node>(std::move(node))), dim_(node_dim(*node_)) {
  if (dim_ < 1) throw DimensionError("ConvexFunction: dimension must be >= 1");
}

// ---- factories --------------------------------------------------------------

ConvexFunction quadratic(LinearMap q, Vector b, double c) {
  if (q.rows() != q.cols() || q.rows() != b.size())
    throw DimensionError("quadratic: Q must be square and match b");
  LinearMap sym = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<LinearMap> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + spectral_norm(sym)))
    throw DomainError("quadratic: Q must be positive semidefinite");
  return ConvexFunction(Quadratic{std::move(sym), std::move(b), c});
}

ConvexFunction quadratic(LinearMap q) {
  Vector b = Vector::Zero(q.rows());
  return quadratic(std::move(q), std::move(b), 0.0);
}

ConvexFunction norm_squared(Eigen::Index dim, double alpha) {
  if (alpha <= 0) throw DomainError("norm_squared: alpha must be positive");
  return ConvexFunction(NormSquared{dim, alpha});
}

ConvexFunction abs_sum(Vector weights) {
  if (weights.size() > 0 && weights.minCoeff() < 0)
    throw DomainError("abs_sum: weights must be nonnegative");
  return ConvexFunction(AbsSum{std::move(weights)});
}

ConvexFunction abs_sum(Eigen::Index dim, double weight) {
  return abs_sum(Vector::Constant(dim, weight));
}

ConvexFunction indicator_box(Vector lo, Vector hi) {
  if (lo.size() != hi.size()) throw DimensionError("indicator_box: lo/hi size mismatch");
  if (((hi - lo).array() < 0).any()) throw DomainError("indicator_box: requires lo <= hi");
  return ConvexFunction(IndicatorBox{std::move(lo), std::move(hi)});
}

ConvexFunction linear_tilt(ConvexFunction base, Vector v) {
  if (base.dim() != v.size()) throw DimensionError("linear_tilt: v size mismatch");
  return ConvexFunction(
      LinearTilt{std::make_shared<ConvexFunction>(std::move(base)), std::move(v)});
}

ConvexFunction separable_sum(std::vector<std::pair<ConvexFunction, Eigen::Index>> terms) {
  if (terms.empty()) throw DimensionError("separable_sum: no terms");
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  SeparableSum node;
  Eigen::Index cursor = 0;
  for (auto& [f, offset] : terms) {
    if (offset != cursor)
      throw DimensionError("separable_sum: slices must tile the whole space");
    cursor += f.dim();
    node.terms.push_back({std::make_shared<ConvexFunction>(std::move(f)), offset});
  }
  node.dim = cursor;
  return ConvexFunction(std::move(node));
}

ConvexFunction stack(ConvexFunction g, ConvexFunction h) {
  Eigen::Index split = g.dim();
  std::vector<std::pair<ConvexFunction, Eigen::Index>> terms;
  terms.emplace_back(std::move(g), 0);
  terms.emplace_back(std::move(h), split);
  return separable_sum(std::move(terms));
}

ConvexFunction moreau_envelope(ConvexFunction base, double lambda) {
  if (lambda <= 0) throw DomainError("moreau_envelope: lambda must be positive");
  return ConvexFunction(
      MoreauEnvelope{std::make_shared<ConvexFunction>(std::move(base)), lambda});
}

ConvexFunction sum_with_quadratic(ConvexFunction base, const LinearMap& a) {
  if (a.rows() != a.cols() || a.rows() != base.dim())
    throw DimensionError("sum_with_quadratic: operator must be square and match base");
  LinearMap sym = 0.5 * (a + a.transpose());
  if (sym.cwiseAbs().maxCoeff() == 0.0) return base;
  if (const auto* q = std::get_if<Quadratic>(&base.node()))
    return quadratic(q->q + sym, q->b, q->c);
  if (const auto* s = std::get_if<NormSquared>(&base.node()))
    return quadratic(LinearMap(sym + s->alpha * LinearMap::Identity(s->dim, s->dim)));
  Eigen::SelfAdjointEigenSolver<LinearMap> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw DomainError("sum_with_quadratic: symmetric part must be positive semidefinite");
  return ConvexFunction(
      SumWithQuadratic{std::make_shared<ConvexFunction>(std::move(base)), std::move(sym)});
}

// ---- eval -------------------------------------------------------------------

ExtReal eval(const ConvexFunction& f, const Vector& x) {
  check_dim(f, x, "eval");
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> ExtReal {
            return 0.5 * x.dot(n.q * x) + n.b.dot(x) + n.c;
          },
          [&](const NormSquared& n) -> ExtReal { return 0.5 * n.alpha * x.squaredNorm(); },
          [&](const AbsSum& n) -> ExtReal { return n.weights.dot(x.cwiseAbs()); },
          [&](const IndicatorBox& n) -> ExtReal {
            for (Eigen::Index i = 0; i < x.size(); ++i) {
              double tol = kBoxTol * std::max(1.0, std::max(std::abs(n.lo[i]), std::abs(n.hi[i])));
              if (x[i] < n.lo[i] - tol || x[i] > n.hi[i] + tol) return ExtReal::infinity();
            }
            return 0.0;
          },
          [&](const LinearTilt& n) -> ExtReal { return eval(*n.base(), x) + n.v.dot(x); },
          [&](const SeparableSum& n) -> ExtReal {
            ExtReal total = 0.0;
            for (const auto& t : n.terms)
              total += eval(*t.f, x.segment(t.offset, t.f->dim()));
            return total;
          },
          [&](const MoreauEnvelope& n) -> ExtReal {
            return moreau_eval(*n.base_, x, n.lambda);
          },
          [&](const SumWithQuadratic& n) -> ExtReal {
            return eval(*n.base_, x) + ExtReal(0.5 * x.dot(n.sym * x));
          },
      },
      f.node());
}

// ---- prox -------------------------------------------------------------------

Vector prox(const ConvexFunction& f, const Vector& x, double lambda) {
  check_dim(f, x, "prox");
  if (lambda <= 0) throw DomainError("prox: lambda must be positive");
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> Vector {
            LinearMap m = LinearMap::Identity(x.size(), x.size()) + lambda * n.q;
            return m.llt().solve(x - lambda * n.b);
          },
          [&](const NormSquared& n) -> Vector { return x / (1.0 + lambda * n.alpha); },
          [&](const AbsSum& n) -> Vector {
            Vector thr = lambda * n.weights;
            return x.array().sign() * (x.cwiseAbs() - thr).cwiseMax(0.0).array();
          },
          [&](const IndicatorBox& n) -> Vector { return x.cwiseMax(n.lo).cwiseMin(n.hi); },
          [&](const LinearTilt& n) -> Vector {
            return prox(*n.base(), x - lambda * n.v, lambda);
          },
          [&](const SeparableSum& n) -> Vector {
            Vector out(x.size());
            for (const auto& t : n.terms)
              out.segment(t.offset, t.f->dim()) =
                  prox(*t.f, x.segment(t.offset, t.f->dim()), lambda);
            return out;
          },
          [&](const MoreauEnvelope& n) -> Vector {
            Vector p = prox(*n.base_, x, n.lambda + lambda);
            return x + (lambda / (n.lambda + lambda)) * (p - x);
          },
          [&](const SumWithQuadratic& n) -> Vector {
            return prox_sum_with_quadratic(n, x, lambda);
          },
      },
      f.node());
}

// ---- conjugate evaluation -----------------------------------------------------

ExtReal conj_eval(const ConvexFunction& f, const Vector& p) {
  check_dim(f, p, "conj_eval");
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> ExtReal {
            Eigen::SelfAdjointEigenSolver<LinearMap> es(n.q);
            Vector y = es.eigenvectors().transpose() * (p - n.b);
            double top = std::max(1.0, es.eigenvalues().maxCoeff());
            double value = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
              if (es.eigenvalues()[i] <= kRangeTol * top) {
                // p - b must lie in range(Q), otherwise the sup is +inf.
                if (std::abs(y[i]) > kRangeTol * (1.0 + p.norm() + n.b.norm()))
                  return ExtReal::infinity();
              } else {
                value += y[i] * y[i] / es.eigenvalues()[i];
              }
            }
            return 0.5 * value - n.c;
          },
          [&](const NormSquared& n) -> ExtReal { return p.squaredNorm() / (2.0 * n.alpha); },
          [&](const AbsSum& n) -> ExtReal {
            for (Eigen::Index i = 0; i < p.size(); ++i)
              if (std::abs(p[i]) > n.weights[i] + kBoxTol) return ExtReal::infinity();
            return 0.0;
          },
          [&](const IndicatorBox& n) -> ExtReal {
            double v = 0.0;
            for (Eigen::Index i = 0; i < p.size(); ++i)
              v += std::max(n.lo[i] * p[i], n.hi[i] * p[i]);
            return v;
          },
          [&](const LinearTilt& n) -> ExtReal { return conj_eval(*n.base(), p - n.v); },
          [&](const SeparableSum& n) -> ExtReal {
            ExtReal total = 0.0;
            for (const auto& t : n.terms)
              total += conj_eval(*t.f, p.segment(t.offset, t.f->dim()));
            return total;
          },
          [&](const MoreauEnvelope& n) -> ExtReal {
            return conj_eval(*n.base_, p) + ExtReal(0.5 * n.lambda * p.squaredNorm());
          },
          [&](const SumWithQuadratic& n) -> ExtReal {
            return conj_sum_with_quadratic(n, p);
          },
      },
      f.node());
}

// ---- subgradient, envelope, gap ----------------------------------------------

Vector subgrad(const ConvexFunction& f, const Vector& x, double lambda_sel) {
  check_dim(f, x, "subgrad");
  if (!eval(f, x).finite())
    throw DomainError("subgrad: point is outside the domain of f");
  auto yosida = [&](double lam) -> Vector { return (x - prox(f, x, lam)) / lam; };
  // One Richardson step: the Moreau-Yosida gradient converges at first order
  // in lambda to the minimal-norm subgradient. The quotient amplifies rounding
  // by 1/lambda, so retry with coarser lambdas before declaring failure.
  const double tol = 1e-5 * (1.0 + std::abs(eval(f, x).value()));
  for (double lam : {lambda_sel, 1e2 * lambda_sel, 1e4 * lambda_sel}) {
    Vector g = 2.0 * yosida(0.5 * lam) - yosida(lam);
    ExtReal gap = fenchel_gap(f, x, g);
    if (gap.finite() && gap.value() <= tol) return g;
  }
  throw EmptySubdifferentialError("subgrad: no subgradient at the queried point");
}

double moreau_eval(const ConvexFunction& f, const Vector& x, double lambda) {
  check_dim(f, x, "moreau_eval");
  if (lambda <= 0) throw DomainError("moreau_eval: lambda must be positive");
  Vector z = prox(f, x, lambda);
  return eval(f, z).value() + (x - z).squaredNorm() / (2.0 * lambda);
}

ExtReal fenchel_gap(const ConvexFunction& f, const Vector& x, const Vector& p) {
  check_dim(f, x, "fenchel_gap");
  check_dim(f, p, "fenchel_gap");
  ExtReal fx = eval(f, x);
  if (!fx.finite()) throw DomainError("fenchel_gap: x is outside dom f");
  ExtReal fs = conj_eval(f, p);
  if (!fs.finite()) return ExtReal::infinity();
  return std::max(0.0, fx.value() + fs.value() - x.dot(p));
}

// ---- symbolic conjugate --------------------------------------------------------

std::optional<ConvexFunction> conjugate(const ConvexFunction& f) {
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> std::optional<ConvexFunction> {
            Eigen::SelfAdjointEigenSolver<LinearMap> es(n.q);
            double top = std::max(1.0, es.eigenvalues().maxCoeff());
            if (es.eigenvalues().minCoeff() <= kRangeTol * top) return std::nullopt;
            LinearMap qinv = es.operatorInverseSqrt() * es.operatorInverseSqrt();
            Vector bi = qinv * n.b;
            return quadratic(qinv, -bi, 0.5 * n.b.dot(bi) - n.c);
          },
          [&](const NormSquared& n) -> std::optional<ConvexFunction> {
            return norm_squared(n.dim, 1.0 / n.alpha);
          },
          [&](const AbsSum& n) -> std::optional<ConvexFunction> {
            return indicator_box(-n.weights, n.weights);
          },
          [&](const IndicatorBox&) -> std::optional<ConvexFunction> {
            return std::nullopt;  // support function of a box is not a catalog node
          },
          [&](const LinearTilt&) -> std::optional<ConvexFunction> { return std::nullopt; },
          [&](const SeparableSum& n) -> std::optional<ConvexFunction> {
            std::vector<std::pair<ConvexFunction, Eigen::Index>> terms;
            for (const auto& t : n.terms) {
              auto c = conjugate(*t.f);
              if (!c) return std::nullopt;
              terms.emplace_back(std::move(*c), t.offset);
            }
            return separable_sum(std::move(terms));
          },
          [&](const MoreauEnvelope& n) -> std::optional<ConvexFunction> {
            auto c = conjugate(*n.base_);
            if (!c) return std::nullopt;
            Eigen::Index d = c->dim();
            return sum_with_quadratic(std::move(*c),
                                      n.lambda * LinearMap::Identity(d, d));
          },
          [&](const SumWithQuadratic& n) -> std::optional<ConvexFunction> {
            // Closed form only for an isotropic quadratic part.
            Eigen::Index d = n.sym.rows();
            double lam = n.sym(0, 0);
            if (lam <= 0) return std::nullopt;
            if ((n.sym - lam * LinearMap::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-14 * lam)
              return std::nullopt;
            auto c = conjugate(*n.base_);
            if (!c) return std::nullopt;
            return moreau_envelope(std::move(*c), lam);
          },
      },
      f.node());
}

// ---- smoothness queries --------------------------------------------------------

bool is_smooth(const ConvexFunction& f) {
  return std::visit(
      overloaded{
          [](const Quadratic&) { return true; },
          [](const NormSquared&) { return true; },
          [](const AbsSum&) { return false; },
          [](const IndicatorBox&) { return false; },
          [](const LinearTilt& n) { return is_smooth(*n.base()); },
          [](const SeparableSum& n) {
            return std::all_of(n.terms.begin(), n.terms.end(),
                               [](const auto& t) { return is_smooth(*t.f); });
          },
          [](const MoreauEnvelope&) { return true; },
          [](const SumWithQuadratic& n) { return is_smooth(*n.base_); },
      },
      f.node());
}

bool is_strongly_convex(const ConvexFunction& f) {
  return std::visit(
      overloaded{
          [](const Quadratic& n) {
            Eigen::SelfAdjointEigenSolver<LinearMap> es(n.q, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff() > 1e-12;
          },
          [](const NormSquared&) { return true; },
          [](const AbsSum&) { return false; },
          [](const IndicatorBox&) { return false; },
          [](const LinearTilt& n) { return is_strongly_convex(*n.base()); },
          [](const SeparableSum& n) {
            return std::all_of(n.terms.begin(), n.terms.end(),
                               [](const auto& t) { return is_strongly_convex(*t.f); });
          },
          [](const MoreauEnvelope&) { return false; },
          [](const SumWithQuadratic& n) { return is_strongly_convex(*n.base_); },
      },
      f.node());
}

Vector grad(const ConvexFunction& f, const Vector& x) {
  check_dim(f, x, "grad");
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> Vector { return n.q * x + n.b; },
          [&](const NormSquared& n) -> Vector { return n.alpha * x; },
          [&](const AbsSum&) -> Vector { throw DomainError("grad: abs_sum is not smooth"); },
          [&](const IndicatorBox&) -> Vector {
            throw DomainError("grad: indicator is not smooth");
          },
          [&](const LinearTilt& n) -> Vector { return grad(*n.base(), x) + n.v; },
          [&](const SeparableSum& n) -> Vector {
            Vector out(x.size());
            for (const auto& t : n.terms)
              out.segment(t.offset, t.f->dim()) =
                  grad(*t.f, x.segment(t.offset, t.f->dim()));
            return out;
          },
          [&](const MoreauEnvelope& n) -> Vector {
            return (x - prox(*n.base_, x, n.lambda)) / n.lambda;
          },
          [&](const SumWithQuadratic& n) -> Vector {
            return grad(*n.base_, x) + n.sym * x;
          },
      },
      f.node());
}

bool has_conj_grad(const ConvexFunction& f) {
  return std::visit(
      overloaded{
          [](const Quadratic& n) {
            Eigen::SelfAdjointEigenSolver<LinearMap> es(n.q, Eigen::EigenvaluesOnly);
            return es.eigenvalues().minCoeff() > 1e-12;
          },
          [](const NormSquared&) { return true; },
          [](const AbsSum&) { return false; },
          [](const IndicatorBox&) { return false; },
          [](const LinearTilt& n) { return has_conj_grad(*n.base()); },
          [](const SeparableSum& n) {
            return std::all_of(n.terms.begin(), n.terms.end(),
                               [](const auto& t) { return has_conj_grad(*t.f); });
          },
          [](const MoreauEnvelope&) { return false; },
          [](const SumWithQuadratic&) { return false; },
      },
      f.node());
}

Vector conj_grad(const ConvexFunction& f, const Vector& p) {
  check_dim(f, p, "conj_grad");
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> Vector { return n.q.llt().solve(p - n.b); },
          [&](const NormSquared& n) -> Vector { return p / n.alpha; },
          [&](const LinearTilt& n) -> Vector { return conj_grad(*n.base(), p - n.v); },
          [&](const SeparableSum& n) -> Vector {
            Vector out(p.size());
            for (const auto& t : n.terms)
              out.segment(t.offset, t.f->dim()) =
                  conj_grad(*t.f, p.segment(t.offset, t.f->dim()));
            return out;
          },
          [&](const auto&) -> Vector {
            throw UnsupportedCombinationError("conj_grad: conjugate gradient unavailable");
          },
      },
      f.node());
}

// ---- batched variants -----------------------------------------------------------

double eval_sum(const ConvexFunction& f, const Matrix& xs, bool* finite) {
  *finite = true;
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> double {
            return 0.5 * (xs.cwiseProduct(n.q * xs)).sum() + (n.b.transpose() * xs).sum() +
                   n.c * static_cast<double>(xs.cols());
          },
          [&](const NormSquared& n) -> double { return 0.5 * n.alpha * xs.squaredNorm(); },
          [&](const AbsSum& n) -> double {
            return n.weights.dot(xs.cwiseAbs().rowwise().sum());
          },
          [&](const IndicatorBox& n) -> double {
            for (Eigen::Index j = 0; j < xs.cols(); ++j) {
              if (!eval(f, xs.col(j)).finite()) {
                *finite = false;
                return 0.0;
              }
            }
            return 0.0;
          },
          [&](const LinearTilt& n) -> double {
            double base = eval_sum(*n.base(), xs, finite);
            return base + n.v.dot(xs.rowwise().sum());
          },
          [&](const SeparableSum& n) -> double {
            double total = 0.0;
            for (const auto& t : n.terms) {
              bool ok = true;
              total += eval_sum(*t.f, xs.middleRows(t.offset, t.f->dim()), &ok);
              if (!ok) *finite = false;
            }
            return total;
          },
          [&](const MoreauEnvelope& n) -> double {
            Matrix z = prox_batch(*n.base_, xs, n.lambda);
            bool ok = true;
            double v = eval_sum(*n.base_, z, &ok) +
                       (xs - z).squaredNorm() / (2.0 * n.lambda);
            if (!ok) *finite = false;
            return v;
          },
          [&](const SumWithQuadratic& n) -> double {
            return eval_sum(*n.base_, xs, finite) + 0.5 * (xs.cwiseProduct(n.sym * xs)).sum();
          },
      },
      f.node());
}

Matrix prox_batch(const ConvexFunction& f, const Matrix& xs, double lambda) {
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> Matrix {
            LinearMap m = LinearMap::Identity(n.q.rows(), n.q.rows()) + lambda * n.q;
            return m.llt().solve((-lambda * n.b).replicate(1, xs.cols()) + xs);
          },
          [&](const NormSquared& n) -> Matrix { return xs / (1.0 + lambda * n.alpha); },
          [&](const AbsSum& n) -> Matrix {
            Matrix thr = (lambda * n.weights).replicate(1, xs.cols());
            return xs.array().sign() * (xs.cwiseAbs() - thr).cwiseMax(0.0).array();
          },
          [&](const IndicatorBox& n) -> Matrix {
            return xs.cwiseMax(n.lo.replicate(1, xs.cols()))
                .cwiseMin(n.hi.replicate(1, xs.cols()));
          },
          [&](const LinearTilt& n) -> Matrix {
            return prox_batch(*n.base(), xs - (lambda * n.v).replicate(1, xs.cols()), lambda);
          },
          [&](const SeparableSum& n) -> Matrix {
            Matrix out(xs.rows(), xs.cols());
            for (const auto& t : n.terms)
              out.middleRows(t.offset, t.f->dim()) =
                  prox_batch(*t.f, xs.middleRows(t.offset, t.f->dim()), lambda);
            return out;
          },
          [&](const MoreauEnvelope& n) -> Matrix {
            Matrix p = prox_batch(*n.base_, xs, n.lambda + lambda);
            return xs + (lambda / (n.lambda + lambda)) * (p - xs);
          },
          [&](const SumWithQuadratic&) -> Matrix {
            Matrix out(xs.rows(), xs.cols());
            for (Eigen::Index j = 0; j < xs.cols(); ++j)
              out.col(j) = prox(f, xs.col(j), lambda);
            return out;
          },
      },
      f.node());
}

Matrix grad_batch(const ConvexFunction& f, const Matrix& xs) {
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> Matrix {
            return n.q * xs + n.b.replicate(1, xs.cols());
          },
          [&](const NormSquared& n) -> Matrix { return n.alpha * xs; },
          [&](const LinearTilt& n) -> Matrix {
            return grad_batch(*n.base(), xs) + n.v.replicate(1, xs.cols());
          },
          [&](const SeparableSum& n) -> Matrix {
            Matrix out(xs.rows(), xs.cols());
            for (const auto& t : n.terms)
              out.middleRows(t.offset, t.f->dim()) =
                  grad_batch(*t.f, xs.middleRows(t.offset, t.f->dim()));
            return out;
          },
          [&](const MoreauEnvelope& n) -> Matrix {
            return (xs - prox_batch(*n.base_, xs, n.lambda)) / n.lambda;
          },
          [&](const SumWithQuadratic& n) -> Matrix {
            return grad_batch(*n.base_, xs) + n.sym * xs;
          },
          [&](const auto&) -> Matrix { throw DomainError("grad_batch: node is not smooth"); },
      },
      f.node());
}

Matrix conj_grad_batch(const ConvexFunction& f, const Matrix& ps) {
  return std::visit(
      overloaded{
          [&](const Quadratic& n) -> Matrix {
            return n.q.llt().solve(ps - n.b.replicate(1, ps.cols()));
          },
          [&](const NormSquared& n) -> Matrix { return ps / n.alpha; },
          [&](const LinearTilt& n) -> Matrix {
            return conj_grad_batch(*n.base(), ps - n.v.replicate(1, ps.cols()));
          },
          [&](const SeparableSum& n) -> Matrix {
            Matrix out(ps.rows(), ps.cols());
            for (const auto& t : n.terms)
              out.middleRows(t.offset, t.f->dim()) =
                  conj_grad_batch(*t.f, ps.middleRows(t.offset, t.f->dim()));
            return out;
          },
          [&](const auto&) -> Matrix {
            throw UnsupportedCombinationError("conj_grad_batch: unavailable");
          },
      },
      f.node());
}

double conj_eval_sum(const ConvexFunction& f, const Matrix& ps, bool* finite) {
  *finite = true;
  return std::visit(
      overloaded{
          [&](const NormSquared& n) -> double { return ps.squaredNorm() / (2.0 * n.alpha); },
          [&](const AbsSum& n) -> double {
            for (Eigen::Index j = 0; j < ps.cols(); ++j)
              for (Eigen::Index i = 0; i < ps.rows(); ++i)
                if (std::abs(ps(i, j)) > n.weights[i] + kBoxTol) {
                  *finite = false;
                  return 0.0;
                }
            return 0.0;
          },
          [&](const IndicatorBox& n) -> double {
            Matrix lo = n.lo.replicate(1, ps.cols());
            Matrix hi = n.hi.replicate(1, ps.cols());
            return (lo.cwiseProduct(ps)).cwiseMax(hi.cwiseProduct(ps)).sum();
          },
          [&](const LinearTilt& n) -> double {
            return conj_eval_sum(*n.base(), ps - n.v.replicate(1, ps.cols()), finite);
          },
          [&](const SeparableSum& n) -> double {
            double total = 0.0;
            for (const auto& t : n.terms) {
              bool ok = true;
              total += conj_eval_sum(*t.f, ps.middleRows(t.offset, t.f->dim()), &ok);
              if (!ok) *finite = false;
            }
            return total;
          },
          [&](const MoreauEnvelope& n) -> double {
            return conj_eval_sum(*n.base_, ps, finite) + 0.5 * n.lambda * ps.squaredNorm();
          },
          [&](const auto&) -> double {
            double total = 0.0;
            for (Eigen::Index j = 0; j < ps.cols(); ++j) {
              ExtReal v = conj_eval(f, ps.col(j));
              if (!v.finite()) {
                *finite = false;
                return 0.0;
              }
              total += v.value();
            }
            return total;
          },
      },
      f.node());
}

}  // namespace asdflow
