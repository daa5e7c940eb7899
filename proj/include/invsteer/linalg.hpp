#pragma once

// Small dense matrices for the p x p factors carried by the semi-invariant
// bookkeeping. The bundled systems have p <= 3, where eigenvalues come in
// closed form from the characteristic polynomial; symmetric matrices of any
// size go through cyclic Jacobi rotations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "invsteer/core.hpp"

namespace invsteer {

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const double& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

// (M + M^t)/2 with each mirrored pair computed once, so the result is
// symmetric to the bit.
inline Matrix symmetric_part(const Matrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("symmetric_part: matrix must be square");
  Matrix h(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    h(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < m.cols; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

inline Vec mat_vec(const Matrix& m, const Vec& v) {
  if (m.cols != v.size()) throw std::invalid_argument("mat_vec: dimension mismatch");
  Vec out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

// v^t M v, evaluated as dot(v, M v).
inline double quadratic(const Matrix& m, const Vec& v) {
  const Vec mv = mat_vec(m, v);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * mv[i];
  return s;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

namespace detail {

// Real roots of x^3 + c2 x^2 + c1 x + c0. Fills `roots` with either all three
// real roots or, when a complex pair exists, the single real root; returns the
// real part shared by the complex pair through pair_re (NaN when none).
inline void cubic_real_roots(double c2, double c1, double c0, std::vector<double>& roots,
                             double& pair_re) {
  roots.clear();
  pair_re = std::numeric_limits<double>::quiet_NaN();
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double shift = c2 / 3.0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  auto polish = [&](double x) {
    // Two Newton passes on the original cubic tighten the trigonometric and
    // Cardano forms to a few ulps.
    for (int it = 0; it < 2; ++it) {
      const double f = ((x + c2) * x + c1) * x + c0;
      const double df = (3.0 * x + 2.0 * c2) * x + c1;
      if (df == 0.0) break;
      x -= f / df;
    }
    return x;
  };

  if (disc > 0.0) {
    // One real root, one complex pair.
    const double s = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 + s);
    const double v = std::cbrt(-q / 2.0 - s);
    const double y = u + v;
    const double r = polish(y - shift);
    roots.push_back(r);
    // The pair's sum is -c2 - r.
    pair_re = (-c2 - r) / 2.0;
    return;
  }
  if (p == 0.0) {
    // Triple root.
    roots.assign(3, polish(-shift));
    return;
  }
  const double mp3 = -p / 3.0;
  const double mag = 2.0 * std::sqrt(mp3);
  const double r0 = std::sqrt(mp3 * mp3 * mp3);
  const double cosphi = std::clamp(-q / (2.0 * r0), -1.0, 1.0);
  const double phi = std::acos(cosphi);
  constexpr double two_pi_3 = 2.0943951023931953;
  for (int k = 0; k < 3; ++k)
    roots.push_back(polish(mag * std::cos(phi / 3.0 - two_pi_3 * k) - shift));
}

inline void char_poly_3x3(const Matrix& m, double& c2, double& c1, double& c0) {
  const double tr = m(0, 0) + m(1, 1) + m(2, 2);
  const double m2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) -
                    m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                     m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                     m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  c2 = -tr;
  c1 = m2;
  c0 = -det;
}

}  // namespace detail

// Largest real part over the eigenvalues of a real matrix, closed form.
// Supports n <= 3; larger matrices have no closed form here.
inline double max_real_eig(const Matrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("max_real_eig: matrix must be square");
  switch (m.rows) {
    case 1:
      return m(0, 0);
    case 2: {
      const double tr = m(0, 0) + m(1, 1);
      const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
      const double disc = tr * tr - 4.0 * det;
      if (disc >= 0.0) return (tr + std::sqrt(disc)) / 2.0;
      return tr / 2.0;
    }
    case 3: {
      double c2, c1, c0;
      detail::char_poly_3x3(m, c2, c1, c0);
      std::vector<double> roots;
      double pair_re;
      detail::cubic_real_roots(c2, c1, c0, roots, pair_re);
      double best = -std::numeric_limits<double>::infinity();
      for (double r : roots) best = std::max(best, r);
      if (std::isfinite(pair_re)) best = std::max(best, pair_re);
      return best;
    }
    default:
      throw std::invalid_argument("max_real_eig: closed form only covers n <= 3");
  }
}

// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations; stops when
// the off-diagonal Frobenius norm falls below tol relative to the matrix norm.
inline Vec eig_symmetric_jacobi(Matrix m, double tol = 1e-12) {
  if (m.rows != m.cols)
    throw std::invalid_argument("eig_symmetric_jacobi: matrix must be square");
  const std::size_t n = m.rows;
  const double scale = std::max(frobenius_norm(m), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * m(i, j) * m(i, j);
    if (std::sqrt(off) <= tol * scale) break;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (m(i, j) == 0.0) continue;
        const double tau = (m(j, j) - m(i, i)) / (2.0 * m(i, j));
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double aii = m(i, i), ajj = m(j, j), aij = m(i, j);
        m(i, i) = aii - t * aij;
        m(j, j) = ajj + t * aij;
        m(i, j) = 0.0;
        m(j, i) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i || k == j) continue;
          const double aik = m(i, k), ajk = m(j, k);
          m(i, k) = c * aik - s * ajk;
          m(k, i) = m(i, k);
          m(j, k) = s * aik + c * ajk;
          m(k, j) = m(j, k);
        }
      }
    }
  }
  Vec eigs(n);
  for (std::size_t i = 0; i < n; ++i) eigs[i] = m(i, i);
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

// Largest eigenvalue of a symmetric matrix: closed form up to 3x3, cyclic
// Jacobi beyond.
inline double max_eig_symmetric(const Matrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("max_eig_symmetric: matrix must be square");
  if (m.rows <= 3) return max_real_eig(m);
  return eig_symmetric_jacobi(m).back();
}

}  // namespace invsteer
