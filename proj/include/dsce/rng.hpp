#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dsce {

/// Deterministic seed derivation. Trial streams are indexed by
/// (root, point, trial) so that appending sweep points leaves existing
/// streams untouched.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t point,
                                 std::uint64_t trial) {
  // splitmix64 over the packed indices
  std::uint64_t z = root + 0x9e3779b97f4a7c15ull * (1 + point) +
                    0xbf58476d1ce4e5b9ull * (1 + trial);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline std::complex<double> complex_gaussian(std::mt19937_64& rng,
                                             double variance = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline Eigen::VectorXcd complex_gaussian_vector(std::mt19937_64& rng,
                                                Eigen::Index n,
                                                double variance = 1.0) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_gaussian(rng, variance);
  return v;
}

}  // namespace dsce
