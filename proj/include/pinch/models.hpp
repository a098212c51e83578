#pragma once
//
// Model zoo: minimal submanifolds of the unit sphere with a chart for the
// geometry engine and, independently, closed-form shape operators.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinch/errors.hpp"
#include "pinch/immersion.hpp"
#include "pinch/matcore.hpp"

namespace pinch::models {

using geom::ImmersionChart;
using geom::Interval;
using geom::Vec;

/// Where an expected value comes from. Serialized verbatim into reports.
inline constexpr const char* kFromReference = "reference";   ///< stated by the theory being checked
inline constexpr const char* kFromDerivation = "derived";    ///< computed by hand from stated results
inline constexpr const char* kFromRegression = "regression"; ///< engine output pinned after validation

struct ExpectedValue {
  std::string key;
  double value = 0.0;
  std::string provenance;
  bool operator==(const ExpectedValue&) const = default;
};

struct ModelParams {
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::optional<std::size_t> k;
  std::vector<std::size_t> partition;
  std::optional<double> radius;
  bool operator==(const ModelParams&) const = default;
};

struct ModelSpec {
  std::string name;
  ModelParams params;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<ExpectedValue> expected;
  std::string expected_verdict; ///< class the analyzer should assign
  std::vector<std::size_t> blocks; ///< intrinsic dimension of each sphere factor (empty if not a product)

  std::optional<double> expect(const std::string& key) const {
    for (const auto& e : expected)
      if (e.key == key)
        return e.value;
    return std::nullopt;
  }
};

struct Model {
  ModelSpec spec;
  ImmersionChart chart;
  ShapeOperatorSet ops; ///< closed-form operators at a representative point
  std::vector<double> base_point;
};

// ---------------------------------------------------------------------------
// Sphere factors in iterated spherical coordinates
// ---------------------------------------------------------------------------

/// Unit vector in R^{d+1} from angles (theta_1..theta_{d-1}, phi).
inline Vec spherical_point(std::span<const double> ang) {
  const std::size_t d = ang.size();
  Vec x(d + 1);
  double s = 1.0;
  for (std::size_t a = 0; a + 1 < d; ++a) {
    x[a] = s * std::cos(ang[a]);
    s *= std::sin(ang[a]);
  }
  x[d - 1] = s * std::cos(ang[d - 1]);
  x[d] = s * std::sin(ang[d - 1]);
  return x;
}

inline void append_sphere_axes(std::size_t d, std::vector<Interval>& dom, std::vector<bool>& per) {
  for (std::size_t a = 0; a + 1 < d; ++a) {
    dom.push_back({0.0, std::numbers::pi});
    per.push_back(false);
  }
  dom.push_back({0.0, 2.0 * std::numbers::pi});
  per.push_back(true);
}

/// Grid with `polar` points on angle axes and `around` on periodic axes.
inline std::vector<std::size_t> default_grid(const std::vector<bool>& periodic, std::size_t polar,
                                             std::size_t around) {
  std::vector<std::size_t> g;
  for (bool p : periodic)
    g.push_back(p ? around : polar);
  return g;
}

/// Product of round spheres S^{d_i}(radius_i) with consecutive coordinates.
inline ImmersionChart product_chart(std::string name, const std::vector<std::size_t>& dims,
                                    const std::vector<double>& radii) {
  ImmersionChart c;
  c.name = std::move(name);
  for (std::size_t d : dims) {
    c.n += d;
    c.ambient_dim += d + 1;
    append_sphere_axes(d, c.domain, c.periodic);
  }
  c.map = [dims, radii](std::span<const double> u) {
    Vec f;
    std::size_t off = 0;
    for (std::size_t b = 0; b < dims.size(); ++b) {
      const Vec x = spherical_point(u.subspan(off, dims[b]));
      for (double v : x)
        f.push_back(radii[b] * v);
      off += dims[b];
    }
    return f;
  };
  return c;
}

/// Grid keeping the total node count modest in higher dimensions.
inline std::vector<std::size_t> zoo_grid(const ImmersionChart& c) {
  if (c.n <= 2)
    return default_grid(c.periodic, 8, 12);
  if (c.n <= 4)
    return default_grid(c.periodic, 4, 5);
  return default_grid(c.periodic, 3, 3);
}

inline std::vector<double> interior_point(const ImmersionChart& c) {
  std::vector<double> u;
  for (std::size_t a = 0; a < c.n; ++a)
    u.push_back(c.domain[a].lo + (c.periodic[a] ? 0.3 : 0.37) * c.domain[a].length());
  return u;
}

// ---------------------------------------------------------------------------
// Sphere-product Gram factor
// ---------------------------------------------------------------------------

struct SimplexGram {
  std::vector<std::size_t> partition;
  GenMat G; ///< (n/n_i) delta_ij - 1
  GenMat W; ///< k x (k-1), W W^T = G

  std::size_t blocks() const { return partition.size(); }
  std::size_t n() const { return std::accumulate(partition.begin(), partition.end(), std::size_t{0}); }
};

inline void validate_partition(const std::vector<std::size_t>& p) {
  if (p.size() < 2)
    throw ConfigError("sphere_product: need at least two factors");
  for (std::size_t d : p)
    if (d == 0)
      throw ConfigError("sphere_product: factor dimensions must be positive");
}

/// Eigendecomposition of G with the null direction dropped; W = V sqrt(Lambda).
inline SimplexGram simplex_gram(const std::vector<std::size_t>& partition) {
  validate_partition(partition);
  SimplexGram s;
  s.partition = partition;
  const std::size_t k = partition.size();
  const double n = static_cast<double>(s.n());
  s.G = GenMat(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      s.G(i, j) = (i == j ? n / static_cast<double>(partition[i]) : 0.0) - 1.0;
  const EigenDecomposition ed = jacobi_eigen(SymMat(s.G));
  // Descending order: the null eigenvalue is last.
  s.W = GenMat(k, k - 1);
  for (std::size_t a = 0; a + 1 < k; ++a) {
    const double root = std::sqrt(std::max(0.0, ed.values[a]));
    for (std::size_t i = 0; i < k; ++i)
      s.W(i, a) = ed.vectors(i, a) * root;
  }
  return s;
}

/// Diagonal operators with block-constant entries W(i, alpha).
inline ShapeOperatorSet product_ops(const SimplexGram& sg) {
  std::vector<SymMat> ops;
  for (std::size_t a = 0; a + 1 < sg.blocks(); ++a) {
    std::vector<double> d;
    for (std::size_t i = 0; i < sg.blocks(); ++i)
      d.insert(d.end(), sg.partition[i], sg.W(i, a));
    ops.push_back(SymMat::diagonal(d));
  }
  return ShapeOperatorSet(std::move(ops));
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Equatorial S^n in S^{n+m}.
inline Model great_sphere(std::size_t n, std::size_t m) {
  if (n < 1)
    throw ConfigError("great_sphere: need n >= 1");
  if (m < 1)
    throw ConfigError("great_sphere: need codimension m >= 1");
  Model md;
  md.spec.name = "great_sphere";
  md.spec.params.n = n;
  md.spec.params.m = m;
  md.spec.n = n;
  md.spec.m = m;
  md.spec.expected = {{"S", 0.0, kFromReference},
                      {"lambda1", 0.0, kFromReference},
                      {"rho_perp", 0.0, kFromReference},
                      {"sectional", 1.0, kFromDerivation}};
  md.spec.expected_verdict = "great_sphere";
  md.spec.blocks = {n};

  auto& c = md.chart;
  c.name = "great_sphere";
  c.n = n;
  c.ambient_dim = n + m + 1;
  append_sphere_axes(n, c.domain, c.periodic);
  const std::size_t N = c.ambient_dim;
  c.map = [N](std::span<const double> u) {
    Vec f = spherical_point(u);
    f.resize(N, 0.0);
    return f;
  };
  c.grid = zoo_grid(c);
  md.ops = ShapeOperatorSet::zeros(n, m);
  md.base_point = interior_point(c);
  return md;
}

/// S^k(sqrt(k/n)) x S^{n-k}(sqrt((n-k)/n)) in S^{n+1}.
inline Model clifford(std::size_t k, std::size_t n) {
  if (n < 2 || k < 1 || k > n - 1)
    throw ConfigError("clifford: need 1 <= k <= n-1");
  Model md;
  md.spec.name = "clifford";
  md.spec.params.k = k;
  md.spec.params.n = n;
  md.spec.n = n;
  md.spec.m = 1;
  const double nd = static_cast<double>(n);
  md.spec.expected = {{"S", nd, kFromReference},
                      {"lambda1", nd, kFromReference},
                      {"rho_perp", 0.0, kFromReference},
                      {"rank", 1.0, kFromDerivation}};
  md.spec.expected_verdict = "clifford";
  md.spec.blocks = {k, n - k};
  const double kd = static_cast<double>(k);
  md.chart = product_chart("clifford", {k, n - k}, {std::sqrt(kd / nd), std::sqrt((nd - kd) / nd)});
  md.chart.grid = zoo_grid(md.chart);
  std::vector<double> d(k, std::sqrt((nd - kd) / kd));
  d.insert(d.end(), n - k, -std::sqrt(kd / (nd - kd)));
  md.ops = ShapeOperatorSet({SymMat::diagonal(d)});
  md.base_point = interior_point(md.chart);
  return md;
}

/// Minimal product of spheres S^{n_1}(sqrt(n_1/n)) x ... in S^{n+k-1}, k = #factors.
inline Model sphere_product(const std::vector<std::size_t>& partition) {
  const SimplexGram sg = simplex_gram(partition);
  const std::size_t n = sg.n();
  const std::size_t k = sg.blocks();
  Model md;
  md.spec.name = "sphere_product";
  md.spec.params.partition = partition;
  md.spec.n = n;
  md.spec.m = k - 1;
  const double nd = static_cast<double>(n);
  md.spec.expected = {{"S", static_cast<double>(k - 1) * nd, kFromReference},
                      {"lambda1", nd, kFromReference},
                      {"rho_perp", 0.0, kFromReference},
                      {"rank", static_cast<double>(k - 1), kFromDerivation}};
  md.spec.expected_verdict = k == 2 ? "clifford" : "sphere_product";
  md.spec.blocks = partition;
  std::vector<double> radii;
  for (std::size_t d : partition)
    radii.push_back(std::sqrt(static_cast<double>(d) / nd));
  md.chart = product_chart("sphere_product", partition, radii);
  md.chart.grid = zoo_grid(md.chart);
  md.ops = product_ops(sg);
  md.base_point = interior_point(md.chart);
  return md;
}

/// Veronese map of the unit vector (x, y, z); lands on the unit S^4.
inline Vec veronese_point(double x, double y, double z) {
  const double r3 = std::sqrt(3.0);
  return {r3 * y * z, r3 * x * z, r3 * x * y, 0.5 * r3 * (x * x - y * y), 0.5 * (x * x + y * y - 2.0 * z * z)};
}

/// Veronese surface in S^4, charted on the upper hemisphere (covers RP^2 once).
/// The operators are taken from the engine at a base point, after checking
/// that the chart lands on the sphere and is minimal there.
inline Model veronese() {
  Model md;
  md.spec.name = "veronese";
  md.spec.n = 2;
  md.spec.m = 2;
  md.spec.expected = {{"S", 4.0 / 3.0, kFromReference},
                      {"lambda1", 2.0 / 3.0, kFromDerivation},
                      {"rho_perp0", 16.0 / 9.0, kFromDerivation},
                      {"rho_perp", 2.0 / 3.0, kFromRegression},
                      {"sectional", 1.0 / 3.0, kFromDerivation}};
  md.spec.expected_verdict = "unclassified";

  auto& c = md.chart;
  c.name = "veronese";
  c.n = 2;
  c.ambient_dim = 5;
  c.domain = {{0.0, 0.5 * std::numbers::pi}, {0.0, 2.0 * std::numbers::pi}};
  c.periodic = {false, true};
  c.map = [](std::span<const double> u) {
    const double st = std::sin(u[0]);
    return veronese_point(st * std::cos(u[1]), st * std::sin(u[1]), std::cos(u[0]));
  };
  c.grid = {16, 24};
  md.base_point = interior_point(c);

  const geom::PointGeometry g = geom::geometry_at(c, md.base_point, false);
  if (!geom::accepted_as_minimal(g.ops))
    throw PreconditionError("veronese: chart failed the minimality check at load");
  if (std::abs(total_S(g.ops) - 4.0 / 3.0) > 1e-5)
    throw PreconditionError("veronese: chart failed the S = 4/3 check at load");
  md.ops = g.ops;
  return md;
}

/// Negative control: S^1(r) x S^1(sqrt(1 - r^2)) in S^3, minimal only at r^2 = 1/2.
inline Model nonminimal_torus(double r) {
  if (!(r > 0.0 && r < 1.0))
    throw ConfigError("nonminimal_torus: need 0 < r < 1");
  const double s = std::sqrt(1.0 - r * r);
  Model md;
  md.spec.name = "nonminimal_torus";
  md.spec.params.radius = r;
  md.spec.n = 2;
  md.spec.m = 1;
  const double S = s * s / (r * r) + r * r / (s * s);
  md.spec.expected = {{"S", S, kFromDerivation}, {"trace", s / r - r / s, kFromDerivation}};
  md.spec.expected_verdict = "unclassified";
  md.spec.blocks = {1, 1};
  md.chart = product_chart("nonminimal_torus", {1, 1}, {r, s});
  md.chart.grid = zoo_grid(md.chart);
  md.ops = ShapeOperatorSet({SymMat::diagonal({s / r, -r / s})});
  md.base_point = interior_point(md.chart);
  return md;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& registered_names() {
  static const std::vector<std::string> names{"great_sphere", "clifford", "sphere_product", "veronese",
                                              "nonminimal_torus"};
  return names;
}

inline Model make_model(const std::string& name, const ModelParams& p) {
  auto need = [&](const std::optional<std::size_t>& v, const char* what) {
    if (!v)
      throw ConfigError(name + ": missing parameter '" + what + "'");
    return *v;
  };
  if (name == "great_sphere")
    return great_sphere(need(p.n, "n"), p.m.value_or(1));
  if (name == "clifford")
    return clifford(need(p.k, "k"), need(p.n, "n"));
  if (name == "sphere_product") {
    if (p.partition.empty())
      throw ConfigError("sphere_product: missing parameter 'partition'");
    return sphere_product(p.partition);
  }
  if (name == "veronese")
    return veronese();
  if (name == "nonminimal_torus")
    return nonminimal_torus(p.radius.value_or(0.6));
  throw ConfigError("unknown model '" + name + "'");
}

/// Every model exercised by the acceptance suite.
inline std::vector<Model> zoo() {
  std::vector<Model> z;
  z.push_back(great_sphere(2, 2));
  for (std::size_t n = 2; n <= 4; ++n)
    for (std::size_t k = 1; k <= 3 && k < n; ++k)
      z.push_back(clifford(k, n));
  z.push_back(sphere_product({1, 1}));
  z.push_back(sphere_product({1, 1, 2}));
  z.push_back(sphere_product({1, 2, 3}));
  z.push_back(veronese());
  return z;
}

} // namespace pinch::models
