#pragma once
//
// Dense linear-algebra core: general and symmetric matrices, commutators,
// Frobenius products, the Gram matrix of a family of shape operators, a
// cyclic Jacobi eigensolver and orthogonal frame changes.
//
// Dimensions in this problem are tiny (n, m <= 16), so everything is a plain
// row-major std::vector<double> and every routine is a straightforward loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pinch/errors.hpp"

namespace pinch {

inline constexpr double kPsdTol = 1e-10;
inline constexpr double kEigTol = 1e-13;
inline constexpr int kMaxJacobiSweeps = 60;
inline constexpr double kOrthoTol = 1e-10;

// ---------------------------------------------------------------------------
// GenMat
// ---------------------------------------------------------------------------

/// Dense real rows x cols matrix, row-major.
class GenMat {
public:
  GenMat() = default;
  GenMat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  GenMat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ShapeError("GenMat: entry count does not match rows*cols");
  }
  GenMat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_)
        throw ShapeError("GenMat: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static GenMat identity(std::size_t n) {
    GenMat I(n, n);
    for (std::size_t i = 0; i < n; ++i)
      I(i, i) = 1.0;
    return I;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  GenMat transpose() const {
    GenMat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        t(j, i) = (*this)(i, j);
    return t;
  }

  GenMat& operator+=(const GenMat& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t k = 0; k < data_.size(); ++k)
      data_[k] += o.data_[k];
    return *this;
  }
  GenMat& operator-=(const GenMat& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t k = 0; k < data_.size(); ++k)
      data_[k] -= o.data_[k];
    return *this;
  }
  GenMat& operator*=(double s) {
    for (double& v : data_)
      v *= s;
    return *this;
  }

  friend GenMat operator+(GenMat a, const GenMat& b) { return a += b; }
  friend GenMat operator-(GenMat a, const GenMat& b) { return a -= b; }
  friend GenMat operator*(GenMat a, double s) { return a *= s; }
  friend GenMat operator*(double s, GenMat a) { return a *= s; }
  friend GenMat operator-(GenMat a) { return a *= -1.0; }

  friend GenMat operator*(const GenMat& a, const GenMat& b) {
    if (a.cols_ != b.rows_)
      throw ShapeError("GenMat product: inner dimensions differ");
    GenMat c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0)
          continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          c(i, j) += aik * b(k, j);
      }
    return c;
  }

  bool operator==(const GenMat&) const = default;

  void require_same_shape(const GenMat& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      std::ostringstream os;
      os << what << ": shape " << rows_ << "x" << cols_ << " vs " << o.rows_ << "x" << o.cols_;
      throw ShapeError(os.str());
    }
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// SymMat
// ---------------------------------------------------------------------------

/// Real symmetric matrix. Construction symmetrizes, so entries(i,j) and
/// entries(j,i) are bitwise identical.
class SymMat {
public:
  SymMat() = default;
  explicit SymMat(std::size_t dim) : m_(dim, dim) {
    if (dim == 0)
      throw ShapeError("SymMat: dim must be >= 1");
  }
  explicit SymMat(const GenMat& a) : m_(a.rows(), a.cols()) {
    if (!a.square() || a.rows() == 0)
      throw ShapeError("SymMat: source must be square with dim >= 1");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
      m_(i, i) = a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = 0.5 * (a(i, j) + a(j, i));
        m_(i, j) = v;
        m_(j, i) = v;
      }
    }
  }
  SymMat(std::initializer_list<std::initializer_list<double>> rows) : SymMat(GenMat(rows)) {}

  static SymMat diagonal(const std::vector<double>& d) {
    SymMat s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      s.m_(i, i) = d[i];
    return s;
  }
  static SymMat identity(std::size_t n) { return diagonal(std::vector<double>(n, 1.0)); }

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  /// Writes both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }

  const GenMat& mat() const { return m_; }
  operator const GenMat&() const { return m_; } // NOLINT(google-explicit-constructor)

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i)
      t += m_(i, i);
    return t;
  }

  SymMat& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  friend SymMat operator*(SymMat a, double s) { return a *= s; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }
  friend SymMat operator+(const SymMat& a, const SymMat& b) { return SymMat(a.m_ + b.m_); }

  bool operator==(const SymMat&) const = default;

private:
  GenMat m_;
};

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

/// XY - YX.
inline GenMat commutator(const GenMat& x, const GenMat& y) {
  if (!x.square() || !y.square() || x.rows() != y.rows())
    throw ShapeError("commutator: operands must be square of equal dimension");
  const GenMat xy = x * y;
  const GenMat yx = y * x;
  return xy - yx;
}

/// Tr(X Y^T), the Frobenius inner product.
inline double frob_inner(const GenMat& x, const GenMat& y) {
  x.require_same_shape(y, "frob_inner");
  const auto& a = x.data();
  const auto& b = y.data();
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += a[k] * b[k];
  return s;
}

/// Sum of squares of the entries.
inline double frob_norm2(const GenMat& x) { return frob_inner(x, x); }
inline double frob_norm(const GenMat& x) { return std::sqrt(frob_norm2(x)); }

/// Max |Q^T Q - I|.
inline double orthogonality_defect(const GenMat& q) {
  if (!q.square())
    throw ShapeError("orthogonality_defect: matrix must be square");
  const GenMat qtq = q.transpose() * q;
  double worst = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j)
      worst = std::max(worst, std::abs(qtq(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

// ---------------------------------------------------------------------------
// ShapeOperatorSet
// ---------------------------------------------------------------------------

/// The m shape operators A^alpha (each n x n symmetric) at one point.
class ShapeOperatorSet {
public:
  ShapeOperatorSet() = default;
  explicit ShapeOperatorSet(std::vector<SymMat> ops) : ops_(std::move(ops)) {
    if (ops_.empty())
      throw ShapeError("ShapeOperatorSet: need at least one operator");
    n_ = ops_.front().dim();
    for (const auto& a : ops_)
      if (a.dim() != n_)
        throw ShapeError("ShapeOperatorSet: operators must share one dimension");
  }

  static ShapeOperatorSet zeros(std::size_t n, std::size_t m) {
    return ShapeOperatorSet(std::vector<SymMat>(m, SymMat(n)));
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return ops_.size(); }
  const SymMat& operator[](std::size_t alpha) const { return ops_[alpha]; }
  const std::vector<SymMat>& ops() const { return ops_; }

  bool minimal() const { return minimal_; }

  /// max_alpha |trace(A^alpha)|.
  double max_abs_trace() const {
    double worst = 0.0;
    for (const auto& a : ops_)
      worst = std::max(worst, std::abs(a.trace()));
    return worst;
  }

  /// Flags the set as traceless. Throws PreconditionError if some trace exceeds tol.
  ShapeOperatorSet& mark_minimal(double tol) {
    const double r = max_abs_trace();
    if (r > tol) {
      std::ostringstream os;
      os << "mark_minimal: trace residual " << r << " exceeds " << tol;
      throw PreconditionError(os.str());
    }
    minimal_ = true;
    return *this;
  }

  ShapeOperatorSet scaled(double t) const {
    std::vector<SymMat> out;
    out.reserve(ops_.size());
    for (const auto& a : ops_)
      out.push_back(a * t);
    return ShapeOperatorSet(std::move(out));
  }

  bool operator==(const ShapeOperatorSet& o) const { return ops_ == o.ops_; }

private:
  std::size_t n_ = 0;
  std::vector<SymMat> ops_;
  bool minimal_ = false;
};

/// Gram matrix (<A^alpha, A^beta>)_{m x m}.
inline SymMat gram(const ShapeOperatorSet& ops) {
  const std::size_t m = ops.m();
  SymMat g(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b)
      g.set(a, b, frob_inner(ops[a], ops[b]));
  return g;
}

/// S = sum_alpha |A^alpha|^2.
inline double total_S(const ShapeOperatorSet& ops) {
  double s = 0.0;
  for (const auto& a : ops.ops())
    s += frob_norm2(a);
  return s;
}

/// rho_perp_0 = sum over ordered pairs (alpha, beta) of |[A^alpha, A^beta]|^2.
inline double rho_perp0(const ShapeOperatorSet& ops) {
  double s = 0.0;
  for (std::size_t a = 0; a < ops.m(); ++a)
    for (std::size_t b = a + 1; b < ops.m(); ++b)
      s += frob_norm2(commutator(ops[a], ops[b]));
  return 2.0 * s;
}

/// Normal scalar curvature sqrt(rho_perp_0) / (n(n-1)).
inline double rho_perp(const ShapeOperatorSet& ops, std::size_t n) {
  if (n < 2)
    throw DomainError("rho_perp: normal scalar curvature needs n >= 2");
  return std::sqrt(rho_perp0(ops)) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver
// ---------------------------------------------------------------------------

/// Eigenvalues sorted non-increasing.
struct Spectrum {
  std::vector<double> values;
  std::size_t dim = 0;

  double largest() const { return values.empty() ? 0.0 : values.front(); }
  bool operator==(const Spectrum&) const = default;
};

/// Eigenvalues with matching eigenvectors (column k of `vectors` pairs with values[k]).
struct EigenDecomposition {
  std::vector<double> values;
  GenMat vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi. Stops when the off-diagonal Frobenius norm is <= kEigTol * |g|.
/// Values are returned sorted non-increasing; ties keep the solver's order.
inline EigenDecomposition jacobi_eigen(const SymMat& g) {
  const std::size_t n = g.dim();
  GenMat a = g.mat();
  GenMat v = GenMat::identity(n);
  const double scale = frob_norm(a);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  double off = off_norm();
  while (off > kEigTol * scale) {
    if (sweep >= kMaxJacobiSweeps) {
      std::ostringstream os;
      os << "jacobi_eigen: no convergence after " << sweep << " sweeps (dim " << n
         << ", off-diagonal norm " << off << ", matrix norm " << scale << ")";
      throw NumericError(os.str());
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0)
          continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++sweep;
    off = off_norm();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = GenMat(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r)
      out.vectors(r, k) = v(r, order[k]);
  }
  out.sweeps = sweep;
  return out;
}

/// Eigenvalues of g, descending. Negative values within kPsdTol * (1 + |g|) are clipped to 0.
inline Spectrum lambda_spectrum(const SymMat& g) {
  EigenDecomposition e = jacobi_eigen(g);
  const double clip = kPsdTol * (1.0 + frob_norm(g));
  for (double& v : e.values)
    if (v < 0.0 && v >= -clip)
      v = 0.0;
  return Spectrum{std::move(e.values), g.dim()};
}

/// Applies f to the eigenvalues: V f(Lambda) V^T.
template <class F>
SymMat spectral_map(const SymMat& g, F f) {
  const EigenDecomposition e = jacobi_eigen(g);
  const std::size_t n = g.dim();
  GenMat out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(e.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) += e.vectors(i, k) * fk * e.vectors(j, k);
  }
  return SymMat(out);
}

// ---------------------------------------------------------------------------
// Frame changes
// ---------------------------------------------------------------------------

/// New operators B^beta = sum_alpha O(alpha, beta) A^alpha.
inline ShapeOperatorSet rotate_normal(const ShapeOperatorSet& ops, const GenMat& o) {
  const std::size_t m = ops.m();
  if (o.rows() != m || o.cols() != m)
    throw ShapeError("rotate_normal: rotation must be m x m");
  if (orthogonality_defect(o) > kOrthoTol)
    throw PreconditionError("rotate_normal: matrix is not orthogonal");
  const std::size_t n = ops.n();
  std::vector<SymMat> out;
  out.reserve(m);
  for (std::size_t b = 0; b < m; ++b) {
    GenMat acc(n, n);
    for (std::size_t a = 0; a < m; ++a)
      if (o(a, b) != 0.0)
        acc += ops[a].mat() * o(a, b);
    out.emplace_back(acc);
  }
  return ShapeOperatorSet(std::move(out));
}

/// Conjugates each operator: A^alpha -> Q^T A^alpha Q.
inline ShapeOperatorSet rotate_tangent(const ShapeOperatorSet& ops, const GenMat& q) {
  const std::size_t n = ops.n();
  if (q.rows() != n || q.cols() != n)
    throw ShapeError("rotate_tangent: rotation must be n x n");
  if (orthogonality_defect(q) > kOrthoTol)
    throw PreconditionError("rotate_tangent: matrix is not orthogonal");
  const GenMat qt = q.transpose();
  std::vector<SymMat> out;
  out.reserve(ops.m());
  for (const auto& a : ops.ops())
    out.emplace_back(qt * a.mat() * q);
  return ShapeOperatorSet(std::move(out));
}

} // namespace pinch
