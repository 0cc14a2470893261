#include "asdflow/lagrangians.hpp"

#include <cmath>

#include "asdflow/errors.hpp"

namespace asdflow {

namespace {

Vector swap_halves(const Vector& x) {
  Eigen::Index n = x.size() / 2;
  Vector out(x.size());
  out.head(n) = x.tail(n);
  out.tail(n) = x.head(n);
  return out;
}

ConvexFunction conjugate_or_throw(const ConvexFunction& f, const char* who) {
  auto c = conjugate(f);
  if (!c)
    throw UnsupportedCombinationError(std::string(who) +
                                      ": no closed-form conjugate for this node combination");
  return std::move(*c);
}

}  // namespace

Vector Automorphism::apply(const Vector& x) const {
  if (x.size() != dim) throw DimensionError("Automorphism: dimension mismatch");
  switch (tag) {
    case AutomorphismTag::Identity:
      return x;
    case AutomorphismTag::Negation:
      return -x;
    case AutomorphismTag::SwapPairs:
      return swap_halves(x);
  }
  throw Error("Automorphism: unreachable");
}

LagrangianSpec build_basic_asd(ConvexFunction phi) {
  LagrangianSpec lag{LagrangianSpec::Kind::BasicASD, std::move(phi), 0.0, {}};
  lag.r = {AutomorphismTag::Identity, lag.phi.dim()};
  return lag;
}

LagrangianSpec build_swap_asd(ConvexFunction big_phi) {
  if (big_phi.dim() % 2 != 0)
    throw DimensionError("build_swap_asd: Phi must live on an even-dimensional space");
  LagrangianSpec lag{LagrangianSpec::Kind::SwapASD, std::move(big_phi), 0.0, {}};
  lag.r = {AutomorphismTag::SwapPairs, lag.phi.dim()};
  return lag;
}

ExtReal eval_lagrangian(const LagrangianSpec& lag, const Vector& x, const Vector& p) {
  switch (lag.kind) {
    case LagrangianSpec::Kind::BasicASD:
      return eval(lag.phi, x) + conj_eval(lag.phi, -p);
    case LagrangianSpec::Kind::SwapASD:
      return eval(lag.phi, x) + conj_eval(lag.phi, -swap_halves(p));
    case LagrangianSpec::Kind::Regularized:
      return ExtReal(moreau_eval(lag.phi, x, lag.lambda)) + conj_eval(lag.phi, -p) +
             ExtReal(0.5 * lag.lambda * p.squaredNorm());
  }
  throw Error("eval_lagrangian: unreachable");
}

ExtReal conj_eval_lagrangian(const LagrangianSpec& lag, const Vector& p, const Vector& x) {
  switch (lag.kind) {
    case LagrangianSpec::Kind::BasicASD: {
      // L*(p,x) = phi*(p) + phi(-x), both through the conjugate node.
      ConvexFunction star = conjugate_or_throw(lag.phi, "conj_eval_lagrangian");
      return eval(star, p) + conj_eval(star, -x);
    }
    case LagrangianSpec::Kind::SwapASD: {
      // L*(p,x) = Phi*(p) + Phi(-Sx).
      ConvexFunction star = conjugate_or_throw(lag.phi, "conj_eval_lagrangian");
      return eval(star, p) + conj_eval(star, -swap_halves(x));
    }
    case LagrangianSpec::Kind::Regularized: {
      // (e_lambda phi)* = phi* + lambda/2 |.|^2;
      // (phi*(-.) + lambda/2 |.|^2)* = e_lambda phi(-.).
      ConvexFunction star = conjugate_or_throw(lag.phi, "conj_eval_lagrangian");
      Eigen::Index d = star.dim();
      ConvexFunction shifted =
          sum_with_quadratic(star, lag.lambda * LinearMap::Identity(d, d));
      return eval(shifted, p) + ExtReal(moreau_eval(lag.phi, -x, lag.lambda));
    }
  }
  throw Error("conj_eval_lagrangian: unreachable");
}

double verify_antiselfdual(const LagrangianSpec& lag, int samples, std::uint64_t seed) {
  if (samples < 1) throw DomainError("verify_antiselfdual: need at least one sample");
  NormalSampler rng(seed);
  double max_gap = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vector x = rng.vector(lag.dim());
    Vector p = rng.vector(lag.dim());
    ExtReal lhs = conj_eval_lagrangian(lag, p, x);
    ExtReal rhs = eval_lagrangian(lag, -lag.r.apply(x), -lag.r.apply(p));
    double gap;
    if (lhs.finite() != rhs.finite())
      gap = std::numeric_limits<double>::infinity();
    else if (!lhs.finite())
      gap = 0.0;
    else
      gap = std::abs(lhs.value() - rhs.value());
    max_gap = std::max(max_gap, gap);
  }
  return max_gap;
}

BoundaryLagrangian build_boundary(ConvexFunction psi1, ConvexFunction psi2,
                                  const LinearMap& a1, const LinearMap& a2) {
  if (a1.rows() != psi1.dim() || a2.rows() != psi2.dim() || psi1.dim() != psi2.dim())
    throw DimensionError("build_boundary: psi_i and A_i dimensions must agree");
  for (const LinearMap* a : {&a1, &a2}) {
    if (!is_positive(*a, 1e-10)) {
      Vector dir = most_negative_direction(*a);
      std::string msg = "build_boundary: operator is not positive; <Av,v> < 0 at v = (";
      for (Eigen::Index i = 0; i < dir.size(); ++i)
        msg += (i ? ", " : "") + std::to_string(dir[i]);
      throw DomainError(msg + ")");
    }
  }
  auto [s1, k1] = split_operator(a1);
  auto [s2, k2] = split_operator(a2);
  BoundaryLagrangian bl{sum_with_quadratic(std::move(psi1), s1),
                        sum_with_quadratic(std::move(psi2), s2), std::move(k1),
                        std::move(k2), a1.rows()};
  return bl;
}

ExtReal eval_boundary(const BoundaryLagrangian& bl, const Vector& a, const Vector& b) {
  if (a.size() != 2 * bl.n || b.size() != 2 * bl.n)
    throw DimensionError("eval_boundary: endpoints must live in R^{2n}");
  Vector a1 = a.head(bl.n), a2 = a.tail(bl.n);
  Vector b1 = b.head(bl.n), b2 = b.tail(bl.n);
  return eval(bl.psi1t, a1) + conj_eval(bl.psi1t, -bl.a1_skew * a1 - a2) +
         eval(bl.psi2t, b1) + conj_eval(bl.psi2t, -bl.a2_skew * b1 + b2);
}

ExtReal conj_eval_boundary(const BoundaryLagrangian& bl, const Vector& x, const Vector& p) {
  if (x.size() != 2 * bl.n || p.size() != 2 * bl.n)
    throw DimensionError("conj_eval_boundary: arguments must live in R^{2n}");
  ConvexFunction s1 = conjugate_or_throw(bl.psi1t, "conj_eval_boundary");
  ConvexFunction s2 = conjugate_or_throw(bl.psi2t, "conj_eval_boundary");
  Vector x1 = x.head(bl.n), x2 = x.tail(bl.n);
  Vector p1 = p.head(bl.n), p2 = p.tail(bl.n);
  // l1*(x1,x2) = psi1~*(x1 + A1a x2) + psi1~(-x2)
  // l2*(p1,p2) = psi2~*(p1 - A2a p2) + psi2~(p2)
  return eval(s1, x1 + bl.a1_skew * x2) + conj_eval(s1, -x2) +
         eval(s2, p1 - bl.a2_skew * p2) + conj_eval(s2, p2);
}

double verify_boundary_selfdual(const BoundaryLagrangian& bl, int samples,
                                std::uint64_t seed) {
  NormalSampler rng(seed);
  double max_gap = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vector x = rng.vector(2 * bl.n);
    Vector p = rng.vector(2 * bl.n);
    ExtReal lhs = conj_eval_boundary(bl, x, p);
    ExtReal rhs = eval_boundary(bl, -swap_halves(x), swap_halves(p));
    double gap;
    if (lhs.finite() != rhs.finite())
      gap = std::numeric_limits<double>::infinity();
    else if (!lhs.finite())
      gap = 0.0;
    else
      gap = std::abs(lhs.value() - rhs.value());
    max_gap = std::max(max_gap, gap);
  }
  return max_gap;
}

ManifoldSpec m_plus(ConvexFunction psi, const LinearMap& a) {
  auto [sym, skew] = split_operator(a);
  return {ManifoldSpec::Kind::MPlus, sum_with_quadratic(std::move(psi), sym),
          std::move(skew)};
}

ManifoldSpec m_minus(ConvexFunction psi, const LinearMap& a) {
  auto [sym, skew] = split_operator(a);
  return {ManifoldSpec::Kind::MMinus, sum_with_quadratic(std::move(psi), sym),
          std::move(skew)};
}

ManifoldSpec m_swap(ConvexFunction big_phi) {
  if (big_phi.dim() % 2 != 0)
    throw DimensionError("m_swap: Phi must live on an even-dimensional space");
  Eigen::Index d = big_phi.dim();
  return {ManifoldSpec::Kind::MSwap, std::move(big_phi), LinearMap::Zero(d, d)};
}

ExtReal manifold_residual(const ManifoldSpec& m, const Vector& x, const Vector& p) {
  switch (m.kind) {
    case ManifoldSpec::Kind::MPlus:
      // -p in (A + d psi)(x)  <=>  psi~(x) + psi~*(-Aa x - p) + <x,p> = 0.
      return eval(m.psi_tilde, x) + conj_eval(m.psi_tilde, -m.a_skew * x - p) +
             ExtReal(x.dot(p));
    case ManifoldSpec::Kind::MMinus:
      return eval(m.psi_tilde, x) + conj_eval(m.psi_tilde, p - m.a_skew * x) +
             ExtReal(-x.dot(p));
    case ManifoldSpec::Kind::MSwap:
      return eval(m.psi_tilde, x) + conj_eval(m.psi_tilde, -swap_halves(p)) +
             ExtReal(x.dot(swap_halves(p)));
  }
  throw Error("manifold_residual: unreachable");
}

}  // namespace asdflow
