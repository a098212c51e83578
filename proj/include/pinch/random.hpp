#pragma once
// Seeded generators for the randomized suites. Every sample i of a sweep with
// seed s draws from its own engine seeded with sample_seed(s, i), so samples
// are independent of evaluation order.

#include <cstdint>
#include <random>
#include <vector>

#include "pinch/matcore.hpp"

namespace pinch {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ index);
}

inline double std_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> d(lo, hi);
  return d(rng);
}

inline GenMat random_genmat(std::size_t rows, std::size_t cols, Rng& rng) {
  GenMat x(rows, cols);
  for (double& v : x.data())
    v = std_normal(rng);
  return x;
}

/// Entrywise standard normal draws, then symmetrized.
inline SymMat random_symmat(std::size_t n, Rng& rng) { return SymMat(random_genmat(n, n, rng)); }

inline ShapeOperatorSet random_ops(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<SymMat> ops;
  ops.reserve(m);
  for (std::size_t a = 0; a < m; ++a)
    ops.push_back(random_symmat(n, rng));
  return ShapeOperatorSet(std::move(ops));
}

/// Haar-distributed orthogonal matrix: Gram-Schmidt QR of a Gaussian matrix.
inline GenMat random_orthogonal(std::size_t n, Rng& rng) {
  GenMat a = random_genmat(n, n, rng);
  GenMat q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = a(i, j);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          d += q(i, k) * col[i];
        for (std::size_t i = 0; i < n; ++i)
          col[i] -= d * q(i, k);
      }
    double nrm = 0.0;
    for (double c : col)
      nrm += c * c;
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i)
      q(i, j) = col[i] / nrm;
  }
  return q;
}

} // namespace pinch
