#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdlab {

using Vector = std::vector<double>;

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const Vector& a) { return dot(a, a); }

inline double norm(const Vector& a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(const Vector& a, const Vector& b) {
  return std::sqrt(squared_distance(a, b));
}

// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
  require(x.size() == y.size(), "axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector subtract(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "subtract: dimension mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline bool all_finite(const Vector& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

// Dense row-major matrix; small dimensions only.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double value = 0.0) : rows(r), cols(c), data(r * c, value) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t d) {
    Matrix m(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }

  bool square() const { return rows == cols; }
};

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data) v = std::max(v, std::abs(x));
  return v;
}

inline bool is_symmetric(const Matrix& m, double relative_tol = 1e-9) {
  if (!m.square()) return false;
  const double scale = std::max(1.0, max_abs(m));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.cols; ++j)
      if (std::abs(m(i, j) - m(j, i)) > relative_tol * scale) return false;
  return true;
}

inline Vector matvec(const Matrix& m, const Vector& x) {
  require(m.cols == x.size(), "matvec: dimension mismatch");
  Vector out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

inline Matrix add_scaled(const Matrix& a, const Matrix& b, double beta) {
  require(a.rows == b.rows && a.cols == b.cols, "add_scaled: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += beta * b.data[i];
  return out;
}

// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
inline Vector symmetric_eigenvalues(Matrix a) {
  require(a.square(), "symmetric_eigenvalues: matrix must be square");
  require(is_symmetric(a), "symmetric_eigenvalues: matrix must be symmetric");
  const std::size_t n = a.rows;
  if (n == 0) return {};
  if (n == 1) return {a(0, 0)};

  const double scale = std::max(1.0, max_abs(a));
  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * scale * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
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
      }
    }
  }

  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Solves a x = b with Gaussian elimination and partial pivoting.
inline Vector solve_linear(Matrix a, Vector b) {
  require(a.square(), "solve_linear: matrix must be square");
  require(a.rows == b.size(), "solve_linear: dimension mismatch");
  const std::size_t n = a.rows;
  const double scale = std::max(1.0, max_abs(a));

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) <= 1e-13 * scale)
      throw std::invalid_argument("solve_linear: matrix is singular to working precision");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }

  Vector x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// Compensated (Kahan) accumulator for long sums of same-scale terms.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double value) {
    const double y = value - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace sgdlab
