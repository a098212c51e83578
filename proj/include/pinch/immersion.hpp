#pragma once
//
// Numerical differential geometry of a chart f : box in R^n -> unit sphere in R^N.
//
// All derivatives are central finite differences with per-axis step
// fd_step * (axis length); with `richardson` enabled each difference quotient
// D(h) is replaced by (4 D(h/2) - D(h)) / 3.
//
// Frame conventions: e_i = sum_a C(i,a) d_a f is the modified Gram-Schmidt
// orthonormalization of the Jacobian columns; the normal frame completes
// {f, e_1..e_n} to an orthonormal basis. Connection forms are
// omega_AB = <d e_A, e_B>, and the second fundamental form is
// h^alpha_ij = <D_{e_i} e_j, xi_alpha>.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pinch/errors.hpp"
#include "pinch/ineq.hpp"
#include "pinch/matcore.hpp"
#include "pinch/quadrature.hpp"

namespace pinch::geom {

using Vec = std::vector<double>;
using ChartMap = std::function<Vec(std::span<const double>)>;

inline constexpr double kRankTol = 1e-8;
inline constexpr double kSphereTol = 1e-10;
inline constexpr double kGaugeMinDot = 0.9;
inline constexpr double kEdgeStepFraction = 0.02; ///< step cap relative to the distance to a chart edge

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

struct ImmersionChart {
  std::string name;
  std::size_t n = 0;           ///< intrinsic dimension
  std::size_t ambient_dim = 0; ///< N = n + m + 1
  ChartMap map;
  std::vector<Interval> domain;
  std::vector<bool> periodic;
  std::vector<std::size_t> grid;
  double fd_step = 1e-3;
  double margin = 1e-4;
  bool richardson = true;

  std::size_t codim() const { return ambient_dim - n - 1; }
  /// Finite-difference step along `axis` at u. On non-periodic axes the step
  /// shrinks near the ends, where spherical coordinates degenerate, but never
  /// below 5% of the nominal step so rounding stays bounded.
  double step(std::size_t axis, std::span<const double> u) const {
    const double h = fd_step * domain[axis].length();
    if (periodic[axis])
      return h;
    const double edge = std::min(u[axis] - domain[axis].lo, domain[axis].hi - u[axis]);
    return std::max(std::min(h, kEdgeStepFraction * edge), 0.05 * h);
  }

  void validate() const {
    if (n == 0 || ambient_dim < n + 2)
      throw ConfigError("chart '" + name + "': need n >= 1 and codimension >= 1");
    if (!map)
      throw ConfigError("chart '" + name + "': no map");
    if (domain.size() != n || periodic.size() != n || grid.size() != n)
      throw ConfigError("chart '" + name + "': domain/periodic/grid must have n entries");
    for (std::size_t a = 0; a < n; ++a) {
      if (!(domain[a].hi > domain[a].lo))
        throw ConfigError("chart '" + name + "': empty domain axis");
      if (grid[a] == 0)
        throw ConfigError("chart '" + name + "': grid counts must be positive");
    }
    if (!(fd_step > 0.0) || !(margin >= 0.0) || margin >= 0.5)
      throw ConfigError("chart '" + name + "': need fd_step > 0 and 0 <= margin < 0.5");
  }
};

inline std::string describe_point(std::span<const double> u) {
  std::ostringstream os;
  os << "(";
  for (std::size_t a = 0; a < u.size(); ++a)
    os << (a ? ", " : "") << u[a];
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += a[k] * b[k];
  return s;
}

inline void axpy(Vec& y, double t, std::span<const double> x) {
  for (std::size_t k = 0; k < y.size(); ++k)
    y[k] += t * x[k];
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vec shifted(std::span<const double> u, std::size_t axis, double t) {
  Vec v(u.begin(), u.end());
  v[axis] += t;
  return v;
}

inline Vec shifted2(std::span<const double> u, std::size_t a, double ta, std::size_t b, double tb) {
  Vec v(u.begin(), u.end());
  v[a] += ta;
  v[b] += tb;
  return v;
}

/// Central difference of a vector-valued function of one variable at 0.
template <class F>
Vec central_diff(F&& fn, double h, bool richardson) {
  auto quotient = [&](double s) {
    Vec p = fn(s);
    const Vec mns = fn(-s);
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] = (p[k] - mns[k]) / (2.0 * s);
    return p;
  };
  Vec d = quotient(h);
  if (!richardson)
    return d;
  const Vec d2 = quotient(0.5 * h);
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] = (4.0 * d2[k] - d[k]) / 3.0;
  return d;
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
inline GenMat inverse(const GenMat& a) {
  const std::size_t n = a.rows();
  GenMat m = a;
  GenMat inv = GenMat::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c)))
        piv = r;
    if (m(piv, c) == 0.0)
      throw NumericError("inverse: singular matrix");
    if (piv != c)
      for (std::size_t k = 0; k < n; ++k) {
        std::swap(m(c, k), m(piv, k));
        std::swap(inv(c, k), inv(piv, k));
      }
    const double d = m(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      m(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m(r, c) == 0.0)
        continue;
      const double f = m(r, c);
      for (std::size_t k = 0; k < n; ++k) {
        m(r, k) -= f * m(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

/// Projects out `basis` (assumed orthonormal) from v, twice.
inline void project_out(Vec& v, const std::vector<Vec>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis)
      axpy(v, -dot(v, b), b);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Point geometry
// ---------------------------------------------------------------------------

struct PointGeometry {
  Vec u;
  Vec position;                    ///< f(u)
  std::vector<Vec> jacobian;       ///< d_a f, radial component removed
  std::vector<Vec> tangent_frame;  ///< e_i
  std::vector<Vec> normal_frame;   ///< xi_alpha
  GenMat coord_metric;             ///< g_ab
  GenMat basis_change;             ///< C with e_i = sum_a C(i,a) d_a f, so C g C^T = I
  double min_singular_value = 0.0; ///< of the Jacobian

  // Filled by second_fundamental_form / geometry_at.
  ShapeOperatorSet ops;

  // Filled by geometry_at(..., with_derivatives = true).
  std::vector<GenMat> christoffels;               ///< christoffels[c](a,b) = Gamma^c_ab
  std::vector<GenMat> tangent_connection;         ///< [a](l,i) = omega_li(d_a), via Christoffels
  std::vector<GenMat> tangent_connection_direct;  ///< same, by differentiating e_l directly
  std::vector<GenMat> normal_connection;          ///< [a](beta,alpha) = omega_{beta alpha}(d_a)
  ineq::NablaH nabla_h;
  double codazzi_residual = 0.0;
  bool has_derivatives = false;

  std::size_t n() const { return tangent_frame.size(); }
  std::size_t m() const { return normal_frame.size(); }

  /// Worst deviation from orthonormality of {f, e_i, xi_alpha}.
  double orthonormality_residual() const {
    std::vector<const Vec*> all{&position};
    for (const auto& e : tangent_frame)
      all.push_back(&e);
    for (const auto& x : normal_frame)
      all.push_back(&x);
    double worst = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i; j < all.size(); ++j)
        worst = std::max(worst, std::abs(detail::dot(*all[i], *all[j]) - (i == j ? 1.0 : 0.0)));
    return worst;
  }
};

inline Vec evaluate(const ImmersionChart& chart, std::span<const double> u) {
  Vec f = chart.map(u);
  if (f.size() != chart.ambient_dim)
    throw ShapeError("chart '" + chart.name + "': map returned the wrong ambient dimension");
  return f;
}

/// Columns d_a f by central differences.
inline std::vector<Vec> jacobian(const ImmersionChart& chart, std::span<const double> u) {
  std::vector<Vec> cols;
  for (std::size_t a = 0; a < chart.n; ++a)
    cols.push_back(detail::central_diff(
        [&](double t) { return evaluate(chart, detail::shifted(u, a, t)); }, chart.step(a, u),
        chart.richardson));
  return cols;
}

/// Second derivatives F[a][b] = d_a d_b f (3-point diagonal, 4-corner mixed stencils).
inline std::vector<std::vector<Vec>> hessian(const ImmersionChart& chart, std::span<const double> u) {
  const std::size_t n = chart.n;
  const Vec f0 = evaluate(chart, u);
  auto diag = [&](std::size_t a, double h) {
    Vec p = evaluate(chart, detail::shifted(u, a, h));
    const Vec mns = evaluate(chart, detail::shifted(u, a, -h));
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] = (p[k] - 2.0 * f0[k] + mns[k]) / (h * h);
    return p;
  };
  auto mixed = [&](std::size_t a, std::size_t b, double ha, double hb) {
    Vec pp = evaluate(chart, detail::shifted2(u, a, ha, b, hb));
    const Vec pm = evaluate(chart, detail::shifted2(u, a, ha, b, -hb));
    const Vec mp = evaluate(chart, detail::shifted2(u, a, -ha, b, hb));
    const Vec mm = evaluate(chart, detail::shifted2(u, a, -ha, b, -hb));
    for (std::size_t k = 0; k < pp.size(); ++k)
      pp[k] = (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * ha * hb);
    return pp;
  };
  auto extrapolate = [&](Vec coarse, const Vec& fine) {
    for (std::size_t k = 0; k < coarse.size(); ++k)
      coarse[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
    return coarse;
  };

  std::vector<std::vector<Vec>> F(n, std::vector<Vec>(n));
  for (std::size_t a = 0; a < n; ++a) {
    const double ha = chart.step(a, u);
    F[a][a] = chart.richardson ? extrapolate(diag(a, ha), diag(a, 0.5 * ha)) : diag(a, ha);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double hb = chart.step(b, u);
      F[a][b] = chart.richardson ? extrapolate(mixed(a, b, ha, hb), mixed(a, b, 0.5 * ha, 0.5 * hb))
                                 : mixed(a, b, ha, hb);
      F[b][a] = F[a][b];
    }
  }
  return F;
}

/// Tangent and normal frames plus the coordinate metric at u. When
/// `reference_normals` is given, the normal frame is rotated onto it by polar
/// alignment, which yields a smooth normal frame on a neighbourhood of the
/// reference point.
inline PointGeometry frames_at(const ImmersionChart& chart, std::span<const double> u,
                               const std::vector<Vec>* reference_normals = nullptr) {
  const std::size_t n = chart.n;
  const std::size_t N = chart.ambient_dim;
  const std::size_t m = chart.codim();

  PointGeometry g;
  g.u.assign(u.begin(), u.end());
  g.position = evaluate(chart, u);
  const double r2 = detail::dot(g.position, g.position);
  if (std::abs(r2 - 1.0) > kSphereTol) {
    std::ostringstream os;
    os << "chart '" << chart.name << "': |f|^2 = " << r2 << " at u = " << describe_point(u)
       << " is off the unit sphere";
    throw PreconditionError(os.str());
  }

  g.jacobian = jacobian(chart, u);
  for (auto& col : g.jacobian)
    detail::axpy(col, -detail::dot(col, g.position) / r2, g.position);

  g.coord_metric = GenMat(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      g.coord_metric(a, b) = detail::dot(g.jacobian[a], g.jacobian[b]);
  {
    const Spectrum sp = lambda_spectrum(SymMat(g.coord_metric));
    g.min_singular_value = std::sqrt(std::max(0.0, sp.values.back()));
  }
  if (!(g.min_singular_value > kRankTol)) {
    std::ostringstream os;
    os << "chart '" << chart.name << "': Jacobian rank deficient at u = " << describe_point(u)
       << " (smallest singular value " << g.min_singular_value << ")";
    throw ChartDegeneracyError(os.str());
  }

  // Modified Gram-Schmidt, re-orthogonalizing when a column loses half its norm.
  for (std::size_t a = 0; a < n; ++a) {
    Vec v = g.jacobian[a];
    const double in = detail::norm(v);
    for (const auto& e : g.tangent_frame)
      detail::axpy(v, -detail::dot(v, e), e);
    if (detail::norm(v) < 0.5 * in)
      for (const auto& e : g.tangent_frame)
        detail::axpy(v, -detail::dot(v, e), e);
    const double nv = detail::norm(v);
    for (double& x : v)
      x /= nv;
    g.tangent_frame.push_back(std::move(v));
  }
  GenMat E(n, n); // E(a,i) = <d_a f, e_i>
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t i = 0; i < n; ++i)
      E(a, i) = detail::dot(g.jacobian[a], g.tangent_frame[i]);
  g.basis_change = detail::inverse(E);

  // Complete {f, e_i} with the standard basis vector of largest residual, repeatedly.
  std::vector<Vec> basis{g.position};
  for (const auto& e : g.tangent_frame)
    basis.push_back(e);
  std::vector<Vec> raw;
  for (std::size_t k = 0; k < m; ++k) {
    Vec best;
    double best_norm = -1.0;
    for (std::size_t c = 0; c < N; ++c) {
      Vec v(N, 0.0);
      v[c] = 1.0;
      detail::project_out(v, basis);
      const double nv = detail::norm(v);
      if (nv > best_norm + 1e-12) {
        best_norm = nv;
        best = std::move(v);
      }
    }
    for (double& x : best)
      x /= best_norm;
    basis.push_back(best);
    raw.push_back(std::move(best));
  }

  if (reference_normals == nullptr) {
    g.normal_frame = std::move(raw);
    return g;
  }

  // Polar alignment: xi = raw * M (M^T M)^{-1/2}, M(beta,alpha) = <raw_beta, ref_alpha>.
  const auto& ref = *reference_normals;
  if (ref.size() != m)
    throw ShapeError("frames_at: reference normal frame has the wrong size");
  GenMat M(m, m);
  for (std::size_t b = 0; b < m; ++b)
    for (std::size_t a = 0; a < m; ++a)
      M(b, a) = detail::dot(raw[b], ref[a]);
  const SymMat mtm(M.transpose() * M);
  const Spectrum sp = lambda_spectrum(mtm);
  if (!(sp.values.back() > 1e-6)) {
    throw GaugeError("chart '" + chart.name + "': normal space rotated too far from the reference at u = " +
                     describe_point(u));
  }
  const GenMat R = M * spectral_map(mtm, [](double x) { return 1.0 / std::sqrt(x); }).mat();
  for (std::size_t a = 0; a < m; ++a) {
    Vec xi(N, 0.0);
    for (std::size_t b = 0; b < m; ++b)
      detail::axpy(xi, R(b, a), raw[b]);
    if (detail::dot(xi, ref[a]) < kGaugeMinDot) {
      std::ostringstream os;
      os << "chart '" << chart.name << "': normal frame alignment " << detail::dot(xi, ref[a])
         << " < " << kGaugeMinDot << " at u = " << describe_point(u);
      throw GaugeError(os.str());
    }
    g.normal_frame.push_back(std::move(xi));
  }
  return g;
}

/// h^alpha_ij in the orthonormal frames of `frames` (which must belong to u).
inline ShapeOperatorSet second_fundamental_form(const ImmersionChart& chart, std::span<const double> u,
                                                const PointGeometry& frames) {
  const std::size_t n = chart.n;
  const std::size_t m = frames.m();
  const auto F = hessian(chart, u);
  const GenMat& C = frames.basis_change;
  std::vector<SymMat> ops;
  for (std::size_t al = 0; al < m; ++al) {
    GenMat hc(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        hc(a, b) = detail::dot(F[a][b], frames.normal_frame[al]);
    ops.emplace_back(C * hc * C.transpose());
  }
  return ShapeOperatorSet(std::move(ops));
}

/// max_alpha |trace A^alpha|.
inline double minimality_residual(const ShapeOperatorSet& ops) { return ops.max_abs_trace(); }

/// Acceptance threshold for minimality_residual: 1e-6 (1 + sqrt S).
inline bool accepted_as_minimal(const ShapeOperatorSet& ops) {
  return minimality_residual(ops) <= 1e-6 * (1.0 + std::sqrt(total_S(ops)));
}

// ---------------------------------------------------------------------------
// Curvature tensors from the operators (Gauss and Ricci equations)
// ---------------------------------------------------------------------------

/// Normal curvature R_{alpha beta k l} = sum_i (h^a_ik h^b_il - h^a_il h^b_ik).
class NormalCurvature {
public:
  NormalCurvature(std::size_t n, std::size_t m) : n_(n), m_(m), v_(m * m * n * n, 0.0) {}
  double& operator()(std::size_t a, std::size_t b, std::size_t k, std::size_t l) {
    return v_[((a * m_ + b) * n_ + k) * n_ + l];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t k, std::size_t l) const {
    return v_[((a * m_ + b) * n_ + k) * n_ + l];
  }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

private:
  std::size_t n_, m_;
  std::vector<double> v_;
};

inline NormalCurvature normal_curvature(const ShapeOperatorSet& ops) {
  const std::size_t n = ops.n();
  const std::size_t m = ops.m();
  NormalCurvature r(n, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            s += ops[a](i, k) * ops[b](i, l) - ops[a](i, l) * ops[b](i, k);
          r(a, b, k, l) = s;
        }
  return r;
}

/// (2 / (n(n-1))) sqrt( sum_{i<j} sum_{r<s} R_{rsij}^2 ).
inline double rho_perp_from_definition(const ShapeOperatorSet& ops, std::size_t n) {
  if (n < 2)
    throw DomainError("rho_perp_from_definition: needs n >= 2");
  const NormalCurvature R = normal_curvature(ops);
  double s = 0.0;
  for (std::size_t i = 0; i < ops.n(); ++i)
    for (std::size_t j = i + 1; j < ops.n(); ++j)
      for (std::size_t r = 0; r < ops.m(); ++r)
        for (std::size_t q = r + 1; q < ops.m(); ++q)
          s += R(r, q, i, j) * R(r, q, i, j);
  const double nn = static_cast<double>(n);
  return 2.0 / (nn * (nn - 1.0)) * std::sqrt(s);
}

/// R_ijij = 1 + sum_alpha (h_ii h_jj - h_ij^2) in an orthonormal frame.
inline double sectional_curvature(const ShapeOperatorSet& ops, std::size_t i, std::size_t j) {
  if (i == j)
    throw DomainError("sectional_curvature: needs i != j");
  if (i >= ops.n() || j >= ops.n())
    throw ShapeError("sectional_curvature: index out of range");
  double s = 1.0;
  for (const auto& a : ops.ops())
    s += a(i, i) * a(j, j) - a(i, j) * a(i, j);
  return s;
}

// ---------------------------------------------------------------------------
// Covariant derivatives
// ---------------------------------------------------------------------------

namespace detail {

/// Everything differentiated along coordinate lines, packed into one vector:
/// h^alpha_ij, C, g, xi_alpha, e_l.
struct Packing {
  std::size_t n, m, N;
  std::size_t h_off() const { return 0; }
  std::size_t c_off() const { return m * n * n; }
  std::size_t g_off() const { return c_off() + n * n; }
  std::size_t xi_off() const { return g_off() + n * n; }
  std::size_t e_off() const { return xi_off() + m * N; }
  std::size_t size() const { return e_off() + n * N; }

  Vec pack(const PointGeometry& p) const {
    Vec v(size());
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          v[h_off() + (a * n + i) * n + j] = p.ops[a](i, j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        v[c_off() + i * n + j] = p.basis_change(i, j);
        v[g_off() + i * n + j] = p.coord_metric(i, j);
      }
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t k = 0; k < N; ++k)
        v[xi_off() + a * N + k] = p.normal_frame[a][k];
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t k = 0; k < N; ++k)
        v[e_off() + l * N + k] = p.tangent_frame[l][k];
    return v;
  }
};

} // namespace detail

/// Frames, metric and second fundamental form at u; with `with_derivatives`
/// also Christoffel symbols, both connections, nabla h and the Codazzi residual.
inline PointGeometry geometry_at(const ImmersionChart& chart, std::span<const double> u,
                                 bool with_derivatives = true) {
  PointGeometry g = frames_at(chart, u);
  g.ops = second_fundamental_form(chart, u, g);
  if (!with_derivatives)
    return g;

  const std::size_t n = chart.n;
  const std::size_t m = g.m();
  const std::size_t N = chart.ambient_dim;
  const detail::Packing P{n, m, N};

  // d[a] = derivative of the packed local data along coordinate a.
  std::vector<Vec> d(n);
  for (std::size_t a = 0; a < n; ++a) {
    d[a] = detail::central_diff(
        [&](double t) {
          const Vec ut = detail::shifted(u, a, t);
          PointGeometry q = frames_at(chart, ut, &g.normal_frame);
          q.ops = second_fundamental_form(chart, ut, q);
          return P.pack(q);
        },
        chart.step(a, u), chart.richardson);
  }

  const GenMat& C = g.basis_change;
  const GenMat ginv = detail::inverse(g.coord_metric);
  GenMat E(n, n); // E(a,i) = <d_a f, e_i>
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t i = 0; i < n; ++i)
      E(a, i) = detail::dot(g.jacobian[a], g.tangent_frame[i]);

  auto dmetric = [&](std::size_t c, std::size_t a, std::size_t b) { return d[c][P.g_off() + a * n + b]; };
  g.christoffels.assign(n, GenMat(n, n));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        double s = 0.0;
        for (std::size_t e = 0; e < n; ++e)
          s += ginv(c, e) * (dmetric(a, b, e) + dmetric(b, a, e) - dmetric(e, a, b));
        g.christoffels[c](a, b) = 0.5 * s;
      }

  g.tangent_connection.assign(n, GenMat(n, n));
  g.tangent_connection_direct.assign(n, GenMat(n, n));
  g.normal_connection.assign(n, GenMat(m, m));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
          s += d[a][P.c_off() + l * n + b] * E(b, i);
          for (std::size_t c = 0; c < n; ++c)
            s += C(l, b) * g.christoffels[c](a, b) * E(c, i);
        }
        g.tangent_connection[a](l, i) = s;
        g.tangent_connection_direct[a](l, i) =
            detail::dot(std::span<const double>(d[a]).subspan(P.e_off() + l * N, N), g.tangent_frame[i]);
      }
    for (std::size_t be = 0; be < m; ++be)
      for (std::size_t al = 0; al < m; ++al)
        g.normal_connection[a](be, al) =
            detail::dot(std::span<const double>(d[a]).subspan(P.xi_off() + be * N, N), g.normal_frame[al]);
  }

  // sum_k h_ijk omega_k = dh_ij + sum_l h_lj omega_li + sum_l h_il omega_lj + sum_b h^b_ij omega_{b alpha}.
  // Along d_a, omega_k(d_a) = E(a,k); contracting with C(k,a) isolates h_ijk.
  g.nabla_h = ineq::NablaH(n, m);
  for (std::size_t al = 0; al < m; ++al)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Vec rhs(n, 0.0);
        for (std::size_t a = 0; a < n; ++a) {
          double s = d[a][P.h_off() + (al * n + i) * n + j];
          const GenMat& w = g.tangent_connection[a];
          for (std::size_t l = 0; l < n; ++l)
            s += g.ops[al](l, j) * w(l, i) + g.ops[al](i, l) * w(l, j);
          for (std::size_t be = 0; be < m; ++be)
            s += g.ops[be](i, j) * g.normal_connection[a](be, al);
          rhs[a] = s;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double s = 0.0;
          for (std::size_t a = 0; a < n; ++a)
            s += C(k, a) * rhs[a];
          g.nabla_h(al, i, j, k) = s;
        }
      }
  g.codazzi_residual = g.nabla_h.symmetry_defect();
  g.has_derivatives = true;
  return g;
}

inline ineq::NablaH nabla_h(const ImmersionChart& chart, std::span<const double> u) {
  return geometry_at(chart, u, true).nabla_h;
}

/// Christoffel symbols Gamma^c_ab from finite differences of the induced metric.
inline std::vector<GenMat> christoffels_at(const ImmersionChart& chart, std::span<const double> u) {
  const std::size_t n = chart.n;
  auto metric = [&](std::span<const double> p) {
    const auto J = jacobian(chart, p);
    const Vec f = evaluate(chart, p);
    Vec g(n * n);
    std::vector<Vec> cols = J;
    for (auto& c : cols)
      detail::axpy(c, -detail::dot(c, f), f);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        g[a * n + b] = detail::dot(cols[a], cols[b]);
    return g;
  };
  const Vec g0 = metric(u);
  GenMat gm(n, n, g0);
  const GenMat ginv = detail::inverse(gm);
  std::vector<Vec> dg(n);
  for (std::size_t c = 0; c < n; ++c)
    dg[c] = detail::central_diff([&](double t) { return metric(detail::shifted(u, c, t)); }, chart.step(c, u),
                                 chart.richardson);
  std::vector<GenMat> gamma(n, GenMat(n, n));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        double s = 0.0;
        for (std::size_t e = 0; e < n; ++e)
          s += ginv(c, e) * (dg[a][b * n + e] + dg[b][a * n + e] - dg[e][a * n + b]);
        gamma[c](a, b) = 0.5 * s;
      }
  return gamma;
}

/// Sectional curvature of the coordinate plane (d_a, d_b) from the intrinsic
/// metric alone (differentiated Christoffel symbols), independent of h.
inline double intrinsic_sectional_curvature(const ImmersionChart& chart, std::span<const double> u,
                                            std::size_t a, std::size_t b) {
  const std::size_t n = chart.n;
  if (a == b || a >= n || b >= n)
    throw DomainError("intrinsic_sectional_curvature: need two distinct coordinate axes");
  auto flat = [&](std::span<const double> p) {
    const auto G = christoffels_at(chart, p);
    Vec v;
    for (const auto& x : G)
      v.insert(v.end(), x.data().begin(), x.data().end());
    return v;
  };
  const Vec G0 = flat(u);
  auto gam = [&](const Vec& v, std::size_t d, std::size_t i, std::size_t j) { return v[(d * n + i) * n + j]; };
  const Vec dA = detail::central_diff([&](double t) { return flat(detail::shifted(u, a, t)); }, chart.step(a, u),
                                      chart.richardson);
  const Vec dB = detail::central_diff([&](double t) { return flat(detail::shifted(u, b, t)); }, chart.step(b, u),
                                      chart.richardson);
  // R^d_{b a b} = d_a Gamma^d_bb - d_b Gamma^d_ab + Gamma^d_ae Gamma^e_bb - Gamma^d_be Gamma^e_ab
  Vec Rd(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    double s = gam(dA, d, b, b) - gam(dB, d, a, b);
    for (std::size_t e = 0; e < n; ++e)
      s += gam(G0, d, a, e) * gam(G0, e, b, b) - gam(G0, d, b, e) * gam(G0, e, a, b);
    Rd[d] = s;
  }
  const auto J = jacobian(chart, u);
  const Vec f = evaluate(chart, u);
  std::vector<Vec> cols = J;
  for (auto& c : cols)
    detail::axpy(c, -detail::dot(c, f), f);
  double num = 0.0;
  for (std::size_t d = 0; d < n; ++d)
    num += detail::dot(cols[a], cols[d]) * Rd[d];
  const double gaa = detail::dot(cols[a], cols[a]);
  const double gbb = detail::dot(cols[b], cols[b]);
  const double gab = detail::dot(cols[a], cols[b]);
  return num / (gaa * gbb - gab * gab);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureGrid {
  std::vector<Vec> nodes;
  std::vector<double> weights;        ///< tensor rule weight * sqrt(det g)
  std::vector<double> volume_element; ///< sqrt(det g) at each node

  double volume() const { return pairwise_sum(weights); }
};

/// Tensor-product rule: periodic axes use the trapezoid rule on the full
/// period; other axes use Gauss-Legendre on the interval shrunk by
/// margin * length at each end. Nodes are ordered with the last axis fastest.
inline QuadratureGrid quadrature_grid(const ImmersionChart& chart) {
  chart.validate();
  const std::size_t n = chart.n;
  std::vector<Rule1D> rules;
  for (std::size_t a = 0; a < n; ++a) {
    const Interval iv = chart.domain[a];
    if (chart.periodic[a]) {
      rules.push_back(periodic_trapezoid(chart.grid[a], iv.lo, iv.hi));
    } else {
      const double shrink = chart.margin * iv.length();
      rules.push_back(gauss_legendre(chart.grid[a], iv.lo + shrink, iv.hi - shrink));
    }
  }
  QuadratureGrid q;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    Vec u(n);
    double w = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
      u[a] = rules[a].nodes[idx[a]];
      w *= rules[a].weights[idx[a]];
    }
    const auto J = jacobian(chart, u);
    const Vec f = evaluate(chart, u);
    GenMat gm(n, n);
    std::vector<Vec> cols = J;
    for (auto& c : cols)
      detail::axpy(c, -detail::dot(c, f), f);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        gm(a, b) = detail::dot(cols[a], cols[b]);
    const Spectrum sp = lambda_spectrum(SymMat(gm));
    double det = 1.0;
    for (double v : sp.values)
      det *= v;
    const double vol = std::sqrt(std::max(0.0, det));
    q.nodes.push_back(std::move(u));
    q.volume_element.push_back(vol);
    q.weights.push_back(w * vol);

    std::size_t a = n;
    while (a > 0) {
      --a;
      if (++idx[a] < chart.grid[a])
        break;
      idx[a] = 0;
      if (a == 0)
        return q;
    }
  }
}

/// Weighted sum of field(node) over the grid, pairwise-summed.
template <class Field>
double integrate(const QuadratureGrid& grid, Field&& field) {
  std::vector<double> terms(grid.nodes.size());
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) {
    const double v = field(grid.nodes[k]);
    if (!std::isfinite(v))
      throw NumericError("integrate: non-finite field value at u = " + describe_point(grid.nodes[k]));
    terms[k] = v * grid.weights[k];
  }
  return pairwise_sum(terms);
}

template <class Field>
double integrate(const ImmersionChart& chart, Field&& field) {
  return integrate(quadrature_grid(chart), std::forward<Field>(field));
}

} // namespace pinch::geom
