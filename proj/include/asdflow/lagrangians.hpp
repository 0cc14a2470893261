#pragma once

#include <cstdint>
#include <memory>

#include "asdflow/convex_function.hpp"
#include "asdflow/sampling.hpp"

namespace asdflow {

enum class AutomorphismTag { Identity, Negation, SwapPairs };

/// Involutive automorphism R of R^dim; SwapPairs acts on R^{2n} by
/// (p, q) |-> (q, p) on the two half-blocks.
struct Automorphism {
  AutomorphismTag tag = AutomorphismTag::Identity;
  Eigen::Index dim = 1;

  Vector apply(const Vector& x) const;
};

/// Anti-selfdual Lagrangian L(x, p) assembled from convex data.
///
///   BasicASD:    L(x,p) = phi(x) + phi*(-p),            R = Identity
///   SwapASD:     L(x,p) = Phi(x) + Phi*(-S p),          R = SwapPairs
///   Regularized: L_lambda(x,p) = e_lambda phi(x) + phi*(-p)
///                  + lambda/2 |p|^2,                    R = Identity
struct LagrangianSpec {
  enum class Kind { BasicASD, SwapASD, Regularized };

  Kind kind = Kind::BasicASD;
  ConvexFunction phi;  // BasicASD/Regularized: phi on R^n; SwapASD: Phi on R^{2n}
  double lambda = 0.0;  // Regularized only
  Automorphism r;

  Eigen::Index dim() const { return phi.dim(); }
};

LagrangianSpec build_basic_asd(ConvexFunction phi);
LagrangianSpec build_swap_asd(ConvexFunction big_phi);

/// L(x, p).
ExtReal eval_lagrangian(const LagrangianSpec& lag, const Vector& x, const Vector& p);

/// L*(p, x), assembled from the symbolic conjugates of the underlying convex
/// data — an independent code path from eval_lagrangian, so comparing the two
/// genuinely checks the anti-selfdual identity.
ExtReal conj_eval_lagrangian(const LagrangianSpec& lag, const Vector& p, const Vector& x);

/// max_{samples} |L*(p,x) - L(-Rx, -Rp)| over seeded standard-normal draws.
double verify_antiselfdual(const LagrangianSpec& lag, int samples,
                           std::uint64_t seed = kDefaultSeed);

/// S-selfdual boundary Lagrangian on (H x H)^2:
///   l((a1,a2),(b1,b2)) = psi1~(a1) + psi1~*(-A1a a1 - a2)
///                      + psi2~(b1) + psi2~*(-A2a b1 + b2)
/// with psi_i~ absorbing the symmetric part of A_i.
struct BoundaryLagrangian {
  ConvexFunction psi1t;
  ConvexFunction psi2t;
  LinearMap a1_skew;
  LinearMap a2_skew;
  Eigen::Index n = 1;  // block dimension; endpoints live in R^{2n}
};

/// Splits each A_i, absorbs the symmetric part; rejects non-positive A_i and
/// reports a violating direction.
BoundaryLagrangian build_boundary(ConvexFunction psi1, ConvexFunction psi2,
                                  const LinearMap& a1, const LinearMap& a2);

/// l(a, b) with a, b in R^{2n}.
ExtReal eval_boundary(const BoundaryLagrangian& bl, const Vector& a, const Vector& b);

/// l*(x, p) via symbolic conjugates; throws when unavailable.
ExtReal conj_eval_boundary(const BoundaryLagrangian& bl, const Vector& x, const Vector& p);

/// max gap |l*(x,p) - l(-Sx, Sp)| over seeded samples, S the in-pair swap.
double verify_boundary_selfdual(const BoundaryLagrangian& bl, int samples,
                                std::uint64_t seed = kDefaultSeed);

/// Lagrangian submanifolds of Definition 1.1:
///   MPlus:  -p in (A + d psi)(x),   MMinus:  p in (A + d psi)(x),
///   MSwap:  -S p in d Phi(x) on R^{2n}.
struct ManifoldSpec {
  enum class Kind { MPlus, MMinus, MSwap };

  Kind kind = Kind::MPlus;
  ConvexFunction psi_tilde;  // psi + 1/2 <A_s x, x>; for MSwap just Phi
  LinearMap a_skew;          // zero for MSwap
};

ManifoldSpec m_plus(ConvexFunction psi, const LinearMap& a);
ManifoldSpec m_minus(ConvexFunction psi, const LinearMap& a);
ManifoldSpec m_swap(ConvexFunction big_phi);

/// Nonnegative defect L_M(x,p) + <Rx, p>; zero (<= tol) iff (x,p) in M;
/// +infinity when x leaves dom psi.
ExtReal manifold_residual(const ManifoldSpec& m, const Vector& x, const Vector& p);

}  // namespace asdflow
