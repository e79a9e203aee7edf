#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace symfield {

/// Seeded generator. Uniforms use the top 53 bits of mt19937_64; normals use Box-Muller,
/// so streams are identical on every platform with IEEE doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

//! SplitMix64 mix of (seed, stream); used to derive independent child seeds.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

Eigen::MatrixXd normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace symfield
