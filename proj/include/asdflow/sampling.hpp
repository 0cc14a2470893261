#pragma once

#include <cstdint>
#include <random>

#include "asdflow/linear_ops.hpp"

namespace asdflow {

/// Default seed for all verification sampling (override via ASDFLOW_SEED in
/// the CLI).
inline constexpr std::uint64_t kDefaultSeed = 0x5eed0a5dULL;

/// Deterministic standard-normal stream. Box-Muller on top of mt19937_64 so
/// that the draw sequence is identical across standard libraries (the
/// distribution objects in <random> are implementation-defined).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  double operator()();

  Vector vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace asdflow
