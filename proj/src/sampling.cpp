#include "asdflow/sampling.hpp"

#include <cmath>

namespace asdflow {

double NormalSampler::operator()() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0,1], u2 in [0,1).
  const double inv = 1.0 / (static_cast<double>(engine_.max()) + 1.0);
  double u1 = (static_cast<double>(engine_()) + 1.0) * inv;
  double u2 = static_cast<double>(engine_()) * inv;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

Vector NormalSampler::vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = (*this)();
  return v;
}

}  // namespace asdflow
