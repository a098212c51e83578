#pragma once
//
// Sharpness probes: random-restart projected ascent on the scale-invariant
// commutator ratios
//
//   ddvv(B)  = sum_{r,s} |[B_r, B_s]|^2 / (sum_r |B_r|^2)^2      (sup = 1)
//   bw(X, Y) = |[X, Y]|^2 / (|X|^2 |Y|^2)                        (sup = 2)
//
// with closed-form gradients and a finite-difference gradient check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pinch/digest.hpp"
#include "pinch/errors.hpp"
#include "pinch/matcore.hpp"
#include "pinch/random.hpp"

namespace pinch::extremal {

enum class Functional { ddvv, bw };

inline const char* to_string(Functional f) { return f == Functional::ddvv ? "ddvv" : "bw"; }

/// Supremum of the ratio.
inline double theoretical_max(Functional f) { return f == Functional::ddvv ? 1.0 : 2.0; }

struct SearchConfig {
  int restarts = 32;
  int max_iters = 2000;
  double step0 = 0.5;
  double shrink = 0.5;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  std::size_t n = 2;
  std::size_t m = 2;

  void validate() const {
    if (restarts < 1)
      throw ConfigError("SearchConfig: restarts must be >= 1");
    if (max_iters < 0)
      throw ConfigError("SearchConfig: max_iters must be >= 0");
    if (!(step0 > 0.0))
      throw ConfigError("SearchConfig: step0 must be > 0");
    if (!(shrink > 0.0 && shrink < 1.0))
      throw ConfigError("SearchConfig: shrink must lie in (0,1)");
    if (!(tol > 0.0))
      throw ConfigError("SearchConfig: tol must be > 0");
    if (n < 1 || m < 1)
      throw ConfigError("SearchConfig: n and m must be >= 1");
  }
};

struct SearchResult {
  double best_ratio = 0.0;
  std::vector<GenMat> best_matrices;
  int iterations_used = 0;
  std::uint64_t seed = 0;
  int best_restart = -1;
  std::string diagnostics;
  /// Accepted ratios per restart, in order.
  std::vector<std::vector<double>> history;

  std::string digest() const {
    Digest d;
    d.add(best_ratio).add(static_cast<std::uint64_t>(iterations_used)).add(seed);
    for (const auto& x : best_matrices)
      d.add(x);
    return d.hex();
  }
};

// ---------------------------------------------------------------------------
// Ratios and gradients
// ---------------------------------------------------------------------------

namespace detail {

inline double sum_norm2(const std::vector<GenMat>& xs) {
  double s = 0.0;
  for (const auto& x : xs)
    s += frob_norm2(x);
  return s;
}

inline double inner(const std::vector<GenMat>& a, const std::vector<GenMat>& b) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    s += frob_inner(a[r], b[r]);
  return s;
}

inline void axpy(std::vector<GenMat>& y, double t, const std::vector<GenMat>& x) {
  for (std::size_t r = 0; r < y.size(); ++r)
    y[r] += x[r] * t;
}

} // namespace detail

/// sum_{r,s} |[B_r, B_s]|^2 over ordered pairs.
inline double ddvv_numerator(const std::vector<GenMat>& b) {
  double s = 0.0;
  for (std::size_t r = 0; r < b.size(); ++r)
    for (std::size_t q = r + 1; q < b.size(); ++q)
      s += frob_norm2(commutator(b[r], b[q]));
  return 2.0 * s;
}

/// Gradient of ddvv_numerator w.r.t. B_r: 4 sum_s [[B_r, B_s], B_s] (valid for symmetric B).
inline std::vector<GenMat> ddvv_numerator_gradient(const std::vector<GenMat>& b) {
  std::vector<GenMat> g;
  for (std::size_t r = 0; r < b.size(); ++r) {
    GenMat acc(b[r].rows(), b[r].cols());
    for (std::size_t s = 0; s < b.size(); ++s)
      if (s != r)
        acc += commutator(commutator(b[r], b[s]), b[s]);
    g.push_back(acc * 4.0);
  }
  return g;
}

inline double ddvv_ratio(const std::vector<GenMat>& b) {
  const double d = detail::sum_norm2(b);
  if (d == 0.0)
    throw DomainError("ddvv_ratio: all matrices vanish");
  return ddvv_numerator(b) / (d * d);
}

inline std::vector<GenMat> ddvv_ratio_gradient(const std::vector<GenMat>& b) {
  const double d = detail::sum_norm2(b);
  if (d == 0.0)
    throw DomainError("ddvv_ratio_gradient: all matrices vanish");
  const double num = ddvv_numerator(b);
  std::vector<GenMat> g = ddvv_numerator_gradient(b);
  for (std::size_t r = 0; r < b.size(); ++r) {
    g[r] *= 1.0 / (d * d);
    g[r] += b[r] * (-4.0 * num / (d * d * d));
  }
  return g;
}

inline double bw_ratio(const GenMat& x, const GenMat& y) {
  const double p = frob_norm2(x);
  const double q = frob_norm2(y);
  if (p == 0.0 || q == 0.0)
    throw DomainError("bw_ratio: zero matrix");
  return frob_norm2(commutator(x, y)) / (p * q);
}

/// Gradients of |[X,Y]|^2 w.r.t. X and Y.
inline std::vector<GenMat> bw_numerator_gradient(const GenMat& x, const GenMat& y) {
  const GenMat c = commutator(x, y);
  const GenMat xt = x.transpose();
  const GenMat yt = y.transpose();
  return {(c * yt - yt * c) * 2.0, (xt * c - c * xt) * 2.0};
}

inline std::vector<GenMat> bw_ratio_gradient(const GenMat& x, const GenMat& y) {
  const double p = frob_norm2(x);
  const double q = frob_norm2(y);
  if (p == 0.0 || q == 0.0)
    throw DomainError("bw_ratio_gradient: zero matrix");
  const double k = frob_norm2(commutator(x, y));
  auto g = bw_numerator_gradient(x, y);
  g[0] *= 1.0 / (p * q);
  g[0] += x * (-2.0 * k / (p * p * q));
  g[1] *= 1.0 / (p * q);
  g[1] += y * (-2.0 * k / (p * q * q));
  return g;
}

inline double ratio(Functional f, const std::vector<GenMat>& pt) {
  if (f == Functional::ddvv)
    return ddvv_ratio(pt);
  if (pt.size() != 2)
    throw ShapeError("bw ratio: expects exactly two matrices");
  return bw_ratio(pt[0], pt[1]);
}

inline std::vector<GenMat> ratio_gradient(Functional f, const std::vector<GenMat>& pt) {
  if (f == Functional::ddvv)
    return ddvv_ratio_gradient(pt);
  if (pt.size() != 2)
    throw ShapeError("bw ratio: expects exactly two matrices");
  return bw_ratio_gradient(pt[0], pt[1]);
}

/// Maximum discrepancy between the analytic gradients (numerator and ratio)
/// and central finite differences with step 1e-6 * |point|. Discrepancies are
/// measured relative to max(|analytic|_inf, ratio / |point|), the natural size
/// of a ratio gradient, which stays meaningful at critical points.
inline double gradient_check(const std::vector<GenMat>& point, Functional f) {
  const double scale = std::sqrt(detail::sum_norm2(point));
  if (scale == 0.0)
    throw DomainError("gradient_check: zero point");
  const double value = ratio(f, point); // throws on a zero denominator
  const double h = 1e-6 * scale;

  auto numerator = [&](const std::vector<GenMat>& p) {
    return f == Functional::ddvv ? ddvv_numerator(p) : frob_norm2(commutator(p[0], p[1]));
  };
  const auto g_num = f == Functional::ddvv ? ddvv_numerator_gradient(point)
                                           : bw_numerator_gradient(point[0], point[1]);
  const auto g_rat = ratio_gradient(f, point);
  const double num_value = numerator(point);

  double worst = 0.0;
  auto compare = [&](const std::vector<GenMat>& g, auto&& fn, double natural) {
    double gmax = natural;
    for (const auto& x : g)
      for (double v : x.data())
        gmax = std::max(gmax, std::abs(v));
    for (std::size_t r = 0; r < point.size(); ++r) {
      const std::size_t rows = point[r].rows();
      const std::size_t cols = point[r].cols();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
          // Symmetric functional: perturb (i,j) and (j,i) together.
          const bool sym = f == Functional::ddvv;
          if (sym && j < i)
            continue;
          auto plus = point;
          auto minus = point;
          plus[r](i, j) += h;
          minus[r](i, j) -= h;
          double analytic = g[r](i, j);
          if (sym && i != j) {
            plus[r](j, i) += h;
            minus[r](j, i) -= h;
            analytic += g[r](j, i);
          }
          const double fd = (fn(plus) - fn(minus)) / (2.0 * h);
          worst = std::max(worst, std::abs(fd - analytic) / gmax);
        }
    }
  };
  compare(g_num, numerator, std::abs(num_value) / scale);
  compare(g_rat, [&](const std::vector<GenMat>& p) { return ratio(f, p); }, std::abs(value) / scale);
  return worst;
}

// ---------------------------------------------------------------------------
// Ascent
// ---------------------------------------------------------------------------

namespace detail {

/// Rescales each block so the functional's normalization holds
/// (sum |B_r|^2 = 1 for ddvv, |X| = |Y| = 1 for bw).
inline void normalize(Functional f, std::vector<GenMat>& pt) {
  if (f == Functional::ddvv) {
    const double s = std::sqrt(sum_norm2(pt));
    for (auto& x : pt)
      x *= 1.0 / s;
  } else {
    for (auto& x : pt)
      x *= 1.0 / frob_norm(x);
  }
}

inline std::vector<GenMat> random_point(Functional f, std::size_t n, std::size_t m, Rng& rng) {
  std::vector<GenMat> pt;
  if (f == Functional::ddvv) {
    for (std::size_t r = 0; r < m; ++r)
      pt.push_back(random_symmat(n, rng).mat());
  } else {
    pt.push_back(random_genmat(n, n, rng));
    pt.push_back(random_genmat(n, n, rng));
  }
  normalize(f, pt);
  return pt;
}

struct RestartOutcome {
  double ratio = 0.0;
  std::vector<GenMat> point;
  int iterations = 0;
  std::vector<double> history;
};

/// One restart of backtracking ascent. When the gradient vanishes (a critical
/// point strictly below the supremum, e.g. commuting starts), the iterate is
/// kicked along a seeded random direction; kicks are only kept if they help.
inline RestartOutcome ascend(Functional f, std::vector<GenMat> pt, const SearchConfig& cfg, Rng& rng) {
  RestartOutcome out;
  normalize(f, pt);
  double cur = ratio(f, pt);
  out.history.push_back(cur);
  double step = cfg.step0;
  int kicks = 0;
  constexpr int kMaxKicks = 16;
  const std::size_t n = pt.front().rows();
  const std::size_t m = pt.size();

  while (out.iterations < cfg.max_iters) {
    auto g = ratio_gradient(f, pt);
    double gnorm = std::sqrt(sum_norm2(g));
    if (gnorm <= 1e-12) {
      if (kicks >= kMaxKicks || cur >= theoretical_max(f) - cfg.tol)
        break;
      ++kicks;
      g = random_point(f, n, m, rng);
      gnorm = std::sqrt(sum_norm2(g));
    }
    bool accepted = false;
    while (step >= cfg.tol * cfg.step0 && out.iterations < cfg.max_iters) {
      ++out.iterations;
      auto cand = pt;
      axpy(cand, step / gnorm, g);
      normalize(f, cand);
      const double val = ratio(f, cand);
      if (val > cur) {
        pt = std::move(cand);
        cur = val;
        out.history.push_back(cur);
        step = std::min(2.0 * step, cfg.step0);
        accepted = true;
        break;
      }
      step *= cfg.shrink;
    }
    if (!accepted)
      break;
  }
  out.ratio = cur;
  out.point = std::move(pt);
  return out;
}

inline SearchResult search(Functional f, const SearchConfig& cfg, const std::vector<GenMat>* start) {
  cfg.validate();
  SearchResult res;
  res.seed = cfg.seed;
  res.best_ratio = -std::numeric_limits<double>::infinity();
  if (f == Functional::ddvv && cfg.m < 2) {
    // A single matrix has no commutators; the ratio is identically zero.
    res.best_ratio = 0.0;
    Rng rng(sample_seed(cfg.seed, 0));
    res.best_matrices = random_point(f, cfg.n, cfg.m, rng);
    res.best_restart = 0;
    res.history.push_back({0.0});
    res.diagnostics = "m < 2: ratio identically zero";
    return res;
  }
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(sample_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    std::vector<GenMat> pt = (start != nullptr && r == 0) ? *start : random_point(f, cfg.n, cfg.m, rng);
    RestartOutcome o = ascend(f, std::move(pt), cfg, rng);
    res.iterations_used += o.iterations;
    res.history.push_back(std::move(o.history));
    if (o.ratio > res.best_ratio) {
      res.best_ratio = o.ratio;
      res.best_matrices = std::move(o.point);
      res.best_restart = r;
    }
  }
  const double bound = theoretical_max(f);
  res.diagnostics = res.best_ratio > bound + cfg.tol ? "bound exceeded" : "ok";
  return res;
}

} // namespace detail

inline SearchResult maximize_ddvv_ratio(const SearchConfig& cfg) {
  if (cfg.n < 2)
    throw DomainError("maximize_ddvv_ratio: needs n >= 2");
  return detail::search(Functional::ddvv, cfg, nullptr);
}

inline SearchResult maximize_bw_ratio(const SearchConfig& cfg) {
  if (cfg.n < 2)
    throw DomainError("maximize_bw_ratio: needs n >= 2");
  return detail::search(Functional::bw, cfg, nullptr);
}

/// Same search, with restart 0 starting from the given point.
inline SearchResult maximize_from(Functional f, const SearchConfig& cfg, const std::vector<GenMat>& start) {
  return detail::search(f, cfg, &start);
}

} // namespace pinch::extremal
