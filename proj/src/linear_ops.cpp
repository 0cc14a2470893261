#include "asdflow/linear_ops.hpp"

#include "asdflow/errors.hpp"

namespace asdflow {

std::pair<LinearMap, LinearMap> split_operator(const LinearMap& a) {
  if (a.rows() != a.cols()) throw DimensionError("split_operator: matrix must be square");
  LinearMap sym = 0.5 * (a + a.transpose());
  LinearMap skew = a - sym;
  return {std::move(sym), std::move(skew)};
}

bool is_positive(const LinearMap& a, double tol) {
  if (a.rows() != a.cols()) throw DimensionError("is_positive: matrix must be square");
  Eigen::SelfAdjointEigenSolver<LinearMap> es(0.5 * (a + a.transpose()),
                                              Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

bool is_skew(const LinearMap& a, double tol) {
  if (a.rows() != a.cols()) throw DimensionError("is_skew: matrix must be square");
  return (a + a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Vector most_negative_direction(const LinearMap& a) {
  Eigen::SelfAdjointEigenSolver<LinearMap> es(0.5 * (a + a.transpose()));
  Eigen::Index which = 0;
  es.eigenvalues().minCoeff(&which);
  return es.eigenvectors().col(which);
}

}  // namespace asdflow
