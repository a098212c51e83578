#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pinch/errors.hpp"

namespace pinch::geom {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `npts` points on [lo, hi]. Roots of P_n by Newton
/// iteration from the Chebyshev-like initial guess.
inline Rule1D gauss_legendre(std::size_t npts, double lo, double hi) {
  if (npts == 0)
    throw DomainError("gauss_legendre: need at least one point");
  Rule1D r;
  r.nodes.resize(npts);
  r.weights.resize(npts);
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const std::size_t nh = (npts + 1) / 2;
  const double n = static_cast<double>(npts);
  for (std::size_t i = 0; i < nh; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 1; j <= npts; ++j) {
        const double p2 = p1;
        p1 = p0;
        const double jj = static_cast<double>(j);
        p0 = ((2.0 * jj - 1.0) * z * p1 - (jj - 1.0) * p2) / jj;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) <= 1e-16)
        break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = 0.0;
    for (std::size_t j = 1; j <= npts; ++j) {
      const double p2 = p1;
      p1 = p0;
      const double jj = static_cast<double>(j);
      p0 = ((2.0 * jj - 1.0) * z * p1 - (jj - 1.0) * p2) / jj;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.nodes[i] = mid - half * z;
    r.nodes[npts - 1 - i] = mid + half * z;
    r.weights[i] = half * w;
    r.weights[npts - 1 - i] = half * w;
  }
  return r;
}

/// Equal-weight trapezoid rule on a full period [lo, hi).
inline Rule1D periodic_trapezoid(std::size_t npts, double lo, double hi) {
  if (npts == 0)
    throw DomainError("periodic_trapezoid: need at least one point");
  Rule1D r;
  const double h = (hi - lo) / static_cast<double>(npts);
  for (std::size_t j = 0; j < npts; ++j) {
    r.nodes.push_back(lo + h * static_cast<double>(j));
    r.weights.push_back(h);
  }
  return r;
}

/// Pairwise (cascade) summation.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs)
      s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace pinch::geom
