#pragma once

#include <Eigen/Dense>
#include <utility>

namespace asdflow {

using Vector = Eigen::VectorXd;
using LinearMap = Eigen::MatrixXd;

/// Splits A into (A_s, A_a) with A_s = (A + A^T)/2 symmetric and
/// A_a = A - A_s skew, so that A_s + A_a == A exactly in floating point.
std::pair<LinearMap, LinearMap> split_operator(const LinearMap& a);

/// True when <Ax, x> >= -tol * |x|^2 for all x, i.e. the symmetric part of A
/// has smallest eigenvalue >= -tol.
bool is_positive(const LinearMap& a, double tol = 1e-12);

/// True when |A + A^T|_max <= tol.
bool is_skew(const LinearMap& a, double tol = 1e-12);

/// Unit direction minimizing <Ax, x>; used to report positivity violations.
Vector most_negative_direction(const LinearMap& a);

}  // namespace asdflow
