#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "asdflow/ext_real.hpp"
#include "asdflow/linear_ops.hpp"

namespace asdflow {

class ConvexFunction;

/// Batch of points, one column per point.
using Matrix = Eigen::MatrixXd;

namespace nodes {

/// f(x) = 1/2 x^T Q x + b^T x + c with Q symmetric PSD.
struct Quadratic {
  LinearMap q;
  Vector b;
  double c = 0.0;
};

/// f(x) = alpha/2 |x|^2 on R^dim.
struct NormSquared {
  Eigen::Index dim = 1;
  double alpha = 1.0;
};

/// f(x) = sum_i w_i |x_i| with w >= 0.
struct AbsSum {
  Vector weights;
};

/// Indicator of the box [lo, hi] (componentwise, finite bounds).
struct IndicatorBox {
  Vector lo;
  Vector hi;
};

/// f(x) = base(x) + <v, x>.
struct LinearTilt {
  ConvexFunction* base() const { return base_.get(); }
  std::shared_ptr<ConvexFunction> base_;
  Vector v;
};

struct SeparableTerm {
  std::shared_ptr<ConvexFunction> f;
  Eigen::Index offset = 0;
};

/// f(x) = sum_j f_j(x[offset_j : offset_j + dim_j]); slices tile [0, dim).
struct SeparableSum {
  std::vector<SeparableTerm> terms;
  Eigen::Index dim = 0;
};

/// Moreau envelope e_lambda(base).
struct MoreauEnvelope {
  std::shared_ptr<ConvexFunction> base_;
  double lambda = 1.0;
};

/// f(x) = base(x) + 1/2 <A_s x, x>; only the symmetric part of the supplied
/// operator enters the value.
struct SumWithQuadratic {
  std::shared_ptr<ConvexFunction> base_;
  LinearMap sym;  // symmetric PSD
};

using Node = std::variant<Quadratic, NormSquared, AbsSum, IndicatorBox, LinearTilt,
                          SeparableSum, MoreauEnvelope, SumWithQuadratic>;

}  // namespace nodes

/// A closed convex function on R^n drawn from a fixed compositional catalog.
/// Immutable and cheap to copy; all operations are free functions.
class ConvexFunction {
 public:
  explicit ConvexFunction(nodes::Node node);

  Eigen::Index dim() const { return dim_; }
  const nodes::Node& node() const { return *node_; }

 private:
  std::shared_ptr<const nodes::Node> node_;
  Eigen::Index dim_;
};

// ---- factories ------------------------------------------------------------

ConvexFunction quadratic(LinearMap q, Vector b, double c = 0.0);
ConvexFunction quadratic(LinearMap q);
ConvexFunction norm_squared(Eigen::Index dim, double alpha = 1.0);
ConvexFunction abs_sum(Vector weights);
ConvexFunction abs_sum(Eigen::Index dim, double weight);
ConvexFunction indicator_box(Vector lo, Vector hi);
ConvexFunction linear_tilt(ConvexFunction base, Vector v);
ConvexFunction separable_sum(std::vector<std::pair<ConvexFunction, Eigen::Index>> terms);
/// Concatenation shortcut: g on the first block, h on the second.
ConvexFunction stack(ConvexFunction g, ConvexFunction h);
ConvexFunction moreau_envelope(ConvexFunction base, double lambda);
/// Simplifies to a plain Quadratic when the base is quadratic, and to the
/// base itself when the symmetric part of a vanishes.
ConvexFunction sum_with_quadratic(ConvexFunction base, const LinearMap& a);

// ---- core operations -------------------------------------------------------

/// f(x); +infinity exactly when x is outside dom f.
ExtReal eval(const ConvexFunction& f, const Vector& x);

/// argmin_z { f(z) + |x - z|^2 / (2 lambda) }.
Vector prox(const ConvexFunction& f, const Vector& x, double lambda);

/// Fenchel conjugate f*(p); +infinity is a valid value.
ExtReal conj_eval(const ConvexFunction& f, const Vector& p);

/// Minimal-norm element of the subdifferential at x, selected through the
/// Moreau-Yosida gradient at lambda_sel with one Richardson step.
Vector subgrad(const ConvexFunction& f, const Vector& x, double lambda_sel = 1e-6);

/// e_lambda f(x) = f(prox) + |x - prox|^2 / (2 lambda); always finite.
double moreau_eval(const ConvexFunction& f, const Vector& x, double lambda);

/// f(x) + f*(p) - <x, p>, clamped at zero from below. A value <= tol
/// certifies p in the subdifferential of f at x.
ExtReal fenchel_gap(const ConvexFunction& f, const Vector& x, const Vector& p);

/// Symbolic conjugate as a catalog node, when one exists.
std::optional<ConvexFunction> conjugate(const ConvexFunction& f);

// ---- smoothness queries (used by the action optimizer) ---------------------

/// True when f has a (locally Lipschitz) gradient everywhere on R^n.
bool is_smooth(const ConvexFunction& f);

/// True when f is strongly convex (then f* is smooth).
bool is_strongly_convex(const ConvexFunction& f);

/// Gradient; requires is_smooth(f).
Vector grad(const ConvexFunction& f, const Vector& x);

/// Gradient of the conjugate, i.e. the inverse of the gradient map; requires
/// is_strongly_convex(f) plus closed-form invertibility (quadratic family).
Vector conj_grad(const ConvexFunction& f, const Vector& p);
bool has_conj_grad(const ConvexFunction& f);

// ---- batched column-wise variants ------------------------------------------

double eval_sum(const ConvexFunction& f, const Matrix& xs, bool* finite);
Matrix prox_batch(const ConvexFunction& f, const Matrix& xs, double lambda);
Matrix grad_batch(const ConvexFunction& f, const Matrix& xs);
Matrix conj_grad_batch(const ConvexFunction& f, const Matrix& ps);
/// sum_j f*(p_j) (finite part); sets *finite = false when any column is +inf.
double conj_eval_sum(const ConvexFunction& f, const Matrix& ps, bool* finite);

}  // namespace asdflow
