#pragma once
//
// Matrix inequalities and pointwise curvature identities, each exposed as a
// signed gap: "large side minus small side", nonnegative iff the inequality
// holds. Also the pinching thresholds evaluated by the analyzer.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinch/digest.hpp"
#include "pinch/errors.hpp"
#include "pinch/matcore.hpp"
#include "pinch/random.hpp"

namespace pinch::ineq {

// ---------------------------------------------------------------------------
// NablaH
// ---------------------------------------------------------------------------

/// First covariant derivative of the second fundamental form, h^alpha_{ijk}.
class NablaH {
public:
  NablaH() = default;
  NablaH(std::size_t n, std::size_t m) : n_(n), m_(m), v_(m * n * n * n, 0.0) {}

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

  double& operator()(std::size_t alpha, std::size_t i, std::size_t j, std::size_t k) {
    return v_[index(alpha, i, j, k)];
  }
  double operator()(std::size_t alpha, std::size_t i, std::size_t j, std::size_t k) const {
    return v_[index(alpha, i, j, k)];
  }
  const std::vector<double>& data() const { return v_; }

  /// The matrix (h^alpha_{ijk})_{ij} at fixed k, i.e. the derivative of A^alpha along e_k.
  SymMat slice(std::size_t alpha, std::size_t k) const {
    GenMat s(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        s(i, j) = (*this)(alpha, i, j, k);
    return SymMat(s);
  }

  /// |nabla h|^2.
  double norm2() const {
    double s = 0.0;
    for (double x : v_)
      s += x * x;
    return s;
  }

  /// max |h_ijk - h_jik|, |h_ijk - h_ikj| over all indices.
  double symmetry_defect() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          for (std::size_t k = 0; k < n_; ++k) {
            const double x = (*this)(a, i, j, k);
            worst = std::max(worst, std::abs(x - (*this)(a, j, i, k)));
            worst = std::max(worst, std::abs(x - (*this)(a, i, k, j)));
          }
    return worst;
  }

  /// Average over the six permutations of (i,j,k).
  NablaH symmetrized() const {
    NablaH out(n_, m_);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          for (std::size_t k = 0; k < n_; ++k) {
            const auto& h = *this;
            out(a, i, j, k) = (h(a, i, j, k) + h(a, i, k, j) + h(a, j, i, k) + h(a, j, k, i) +
                               h(a, k, i, j) + h(a, k, j, i)) /
                              6.0;
          }
    return out;
  }

  NablaH scaled(double t) const {
    NablaH out = *this;
    for (double& x : out.v_)
      x *= t;
    return out;
  }

private:
  std::size_t index(std::size_t a, std::size_t i, std::size_t j, std::size_t k) const {
    return ((a * n_ + i) * n_ + j) * n_ + k;
  }

  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> v_;
};

/// Raw Gaussian array, fully symmetrized over (i,j,k).
inline NablaH random_nablah(std::size_t n, std::size_t m, Rng& rng) {
  NablaH raw(n, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          raw(a, i, j, k) = std_normal(rng);
  return raw.symmetrized();
}

// ---------------------------------------------------------------------------
// GapReport
// ---------------------------------------------------------------------------

struct GapReport {
  std::string name;
  double value = 0.0;
  std::string inputs_digest;
  std::optional<std::uint64_t> seed;

  bool operator==(const GapReport&) const = default;
};

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace detail {

/// All pairwise commutators, comm[a][b] = [A^a, A^b].
inline std::vector<std::vector<GenMat>> commutator_table(std::span<const SymMat> b) {
  const std::size_t m = b.size();
  std::vector<std::vector<GenMat>> c(m, std::vector<GenMat>(m));
  for (std::size_t r = 0; r < m; ++r) {
    c[r][r] = GenMat(b[r].dim(), b[r].dim());
    for (std::size_t s = r + 1; s < m; ++s) {
      c[r][s] = commutator(b[r], b[s]);
      c[s][r] = -c[r][s];
    }
  }
  return c;
}

inline void require_same_dim(std::span<const SymMat> b, const char* what) {
  for (const auto& x : b)
    if (x.dim() != b.front().dim())
      throw ShapeError(std::string(what) + ": matrices must share one dimension");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Matrix inequalities
// ---------------------------------------------------------------------------

/// (sum_r |B_r|^2)^2 - sum_{r,s} |[B_r, B_s]|^2.
inline double ddvv_gap(std::span<const SymMat> b) {
  if (b.empty())
    return 0.0;
  detail::require_same_dim(b, "ddvv_gap");
  double norms = 0.0;
  for (const auto& x : b)
    norms += frob_norm2(x);
  double comm = 0.0;
  for (std::size_t r = 0; r < b.size(); ++r)
    for (std::size_t s = r + 1; s < b.size(); ++s)
      comm += frob_norm2(commutator(b[r], b[s]));
  return norms * norms - 2.0 * comm;
}

/// 2 |X|^2 |Y|^2 - |[X,Y]|^2.
inline double bw_gap(const GenMat& x, const GenMat& y) {
  return 2.0 * frob_norm2(x) * frob_norm2(y) - frob_norm2(commutator(x, y));
}

// ---------------------------------------------------------------------------
// Algebraic terms of the Laplacian of rho_perp_0
// ---------------------------------------------------------------------------

/// sum_{a,b,c} <A^a, A^c> <[A^b, A^c], [A^a, A^b]>.
inline double term_T1(const ShapeOperatorSet& ops) {
  const std::size_t m = ops.m();
  const auto c = detail::commutator_table(ops.ops());
  const SymMat g = gram(ops);
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b)
        continue;
      for (std::size_t k = 0; k < m; ++k) {
        if (k == b || g(a, k) == 0.0)
          continue;
        s += g(a, k) * frob_inner(c[b][k], c[a][b]);
      }
    }
  return s;
}

/// lambda_1 * rho_perp_0 + T1; nonnegative.
inline double lemma32_gap(const ShapeOperatorSet& ops) {
  const double lambda1 = lambda_spectrum(gram(ops)).largest();
  return lambda1 * rho_perp0(ops) + term_T1(ops);
}

/// sum_a | sum_c [[A^a, A^c], A^c] |^2.
inline double term_T2(const ShapeOperatorSet& ops) {
  const std::size_t m = ops.m();
  const std::size_t n = ops.n();
  const auto c = detail::commutator_table(ops.ops());
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    GenMat acc(n, n);
    for (std::size_t k = 0; k < m; ++k)
      if (k != a)
        acc += commutator(c[a][k], ops[k]);
    s += frob_norm2(acc);
  }
  return s;
}

/// 2 S rho_perp_0 - T2; nonnegative.
inline double lemma34_gap(const ShapeOperatorSet& ops) {
  return 2.0 * total_S(ops) * rho_perp0(ops) - term_T2(ops);
}

/// The successive upper bounds in the Cauchy / Boettcher-Wenzel chain for T2:
/// T2 <= triangle <= bw_bound <= 2 S rho_perp_0.
struct Lemma34Chain {
  double t2 = 0.0;
  double triangle = 0.0; ///< sum_a (sum_c |[[A^a,A^c],A^c]|)^2
  double bw_bound = 0.0; ///< sum_a (sum_c sqrt2 |[A^a,A^c]| |A^c|)^2
  double top = 0.0;      ///< 2 S rho_perp_0
};

inline Lemma34Chain lemma34_chain(const ShapeOperatorSet& ops) {
  const std::size_t m = ops.m();
  const auto c = detail::commutator_table(ops.ops());
  Lemma34Chain out;
  out.t2 = term_T2(ops);
  for (std::size_t a = 0; a < m; ++a) {
    double tri = 0.0;
    double bw = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      tri += frob_norm(commutator(c[a][k], ops[k]));
      bw += std::sqrt(2.0) * frob_norm(c[a][k]) * frob_norm(ops[k]);
    }
    out.triangle += tri * tri;
    out.bw_bound += bw * bw;
  }
  out.top = 2.0 * total_S(ops) * rho_perp0(ops);
  return out;
}

inline void require_matching(const ShapeOperatorSet& ops, const NablaH& nh, const char* what) {
  if (nh.n() != ops.n() || nh.m() != ops.m())
    throw ShapeError(std::string(what) + ": NablaH dimensions do not match the operators");
}

/// sum_{a,b} < sum_k [nabla_k A^a, nabla_k A^b], [A^a, A^b] >.
inline double term_T3(const ShapeOperatorSet& ops, const NablaH& nh) {
  require_matching(ops, nh, "term_T3");
  const std::size_t m = ops.m();
  const std::size_t n = ops.n();
  const auto c = detail::commutator_table(ops.ops());
  std::vector<std::vector<SymMat>> d(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t k = 0; k < n; ++k)
      d[a].push_back(nh.slice(a, k));
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b)
        continue;
      GenMat acc(n, n);
      for (std::size_t k = 0; k < n; ++k)
        acc += commutator(d[a][k], d[b][k]);
      s += frob_inner(acc, c[a][b]);
    }
  return s;
}

/// |nabla h|^2 sqrt(rho_perp_0) + T3; nonnegative.
inline double lemma33_gap(const ShapeOperatorSet& ops, const NablaH& nh) {
  require_matching(ops, nh, "lemma33_gap");
  return nh.norm2() * std::sqrt(rho_perp0(ops)) + term_T3(ops, nh);
}

// ---------------------------------------------------------------------------
// Simons balance and thresholds
// ---------------------------------------------------------------------------

/// n S - rho_perp_0 - |A|^2. Equals (1/2) Laplacian(S) - |nabla h|^2, hence
/// vanishes identically when the second fundamental form is parallel.
inline double simons_balance(const ShapeOperatorSet& ops, std::size_t n) {
  return static_cast<double>(n) * total_S(ops) - rho_perp0(ops) - frob_norm2(gram(ops));
}

/// inf(n - lambda_1) / (sqrt2 n (n-1)).
inline double thm11_bound(double inf_n_minus_lambda1, std::size_t n) {
  if (n < 2)
    throw DomainError("thm11_bound: needs n >= 2");
  const double nn = static_cast<double>(n);
  return inf_n_minus_lambda1 / (std::sqrt(2.0) * nn * (nn - 1.0));
}

struct QuadSample {
  double S = 0.0;
  double weight = 0.0;
};

struct Cor13Result {
  double delta = 0.0;
  double vol = 0.0;
  double int_S = 0.0;
  double int_S2 = 0.0;
  std::optional<double> low;  ///< rho_perp <= low is one admissible branch
  std::optional<double> high; ///< rho_perp >= high is the other
};

/// Discriminant of the quadratic in sqrt(rho_perp_0) obtained after integrating,
/// with both rho_perp branch bounds when it is nonnegative.
inline Cor13Result cor13_delta(std::span<const QuadSample> samples, std::size_t n) {
  if (samples.empty())
    throw DomainError("cor13_delta: empty sample list");
  if (n < 2)
    throw DomainError("cor13_delta: needs n >= 2");
  const double nn = static_cast<double>(n);
  Cor13Result r;
  double int_3S_minus_n = 0.0;
  double int_S_S_minus_n = 0.0;
  for (const auto& s : samples) {
    if (!(s.weight > 0.0))
      throw PreconditionError("cor13_delta: quadrature weights must be positive");
    r.vol += s.weight;
    r.int_S += s.weight * s.S;
    r.int_S2 += s.weight * s.S * s.S;
    int_3S_minus_n += s.weight * (3.0 * s.S - nn);
    int_S_S_minus_n += s.weight * s.S * (s.S - nn);
  }
  r.delta = int_3S_minus_n * int_3S_minus_n - 4.0 * r.vol * int_S_S_minus_n;
  if (r.delta >= 0.0) {
    const double denom = 2.0 * nn * (nn - 1.0) * r.vol;
    const double sq = std::sqrt(r.delta);
    r.low = (-int_3S_minus_n - sq) / denom;
    r.high = (-int_3S_minus_n + sq) / denom;
  }
  return r;
}

/// (n - 3S + sqrt(5S^2 - 2nS + n^2)) / (2n(n-1)).
inline double cor14_threshold(double S, std::size_t n) {
  if (n < 2)
    throw DomainError("cor14_threshold: needs n >= 2");
  const double nn = static_cast<double>(n);
  return (nn - 3.0 * S + std::sqrt(5.0 * S * S - 2.0 * nn * S + nn * nn)) / (2.0 * nn * (nn - 1.0));
}

/// Pointwise integrand whose integral is nonnegative under the main pinching
/// hypothesis; C plays max over M of rho_perp_0.
inline double key_integrand(const ShapeOperatorSet& ops, std::size_t n, double C) {
  if (C < 0.0)
    throw DomainError("key_integrand: C must be nonnegative");
  const double nn = static_cast<double>(n);
  const double rho0 = rho_perp0(ops);
  const double S = total_S(ops);
  const double lambda1 = lambda_spectrum(gram(ops)).largest();
  const double rc = std::sqrt(C);
  if (C == 0.0)
    return rho0 * (rc - nn + lambda1) + rc * S * (lambda1 - nn) + 2.0 * S * rho0;
  return rho0 * (rc - nn + lambda1) + rc * S * (-nn + lambda1 + 2.0 * rho0 / rc);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline GapReport make_report(std::string name, double value, const ShapeOperatorSet& ops,
                             std::optional<std::uint64_t> seed = std::nullopt) {
  Digest d;
  d.add(name).add(ops);
  return GapReport{std::move(name), value, d.hex(), seed};
}

/// Every gap functional that depends only on the operators.
inline std::vector<GapReport> evaluate_all(const ShapeOperatorSet& ops) {
  std::vector<GapReport> out;
  out.push_back(make_report("ddvv_gap", ddvv_gap(ops.ops()), ops));
  out.push_back(make_report("lemma32_gap", lemma32_gap(ops), ops));
  out.push_back(make_report("lemma34_gap", lemma34_gap(ops), ops));
  if (ops.n() >= 2)
    out.push_back(make_report("simons_balance", simons_balance(ops, ops.n()), ops));
  return out;
}

} // namespace pinch::ineq
