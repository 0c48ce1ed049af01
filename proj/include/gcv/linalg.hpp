#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gcv/error.hpp"

namespace gcv {

using Vec = std::vector<double>;

/// Dense row-major matrix sized for Jacobians at desk scale (k, n <= a few
/// dozen). No view machinery, just storage plus the handful of products the
/// library needs.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool all_finite() const {
    for (double x : a)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Matrix matmul(const Matrix& A, const Matrix& B) {
  if (A.cols != B.rows) throw DimensionError("matmul: inner sizes differ");
  Matrix C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t l = 0; l < A.cols; ++l) {
      double ail = A(i, l);
      if (ail == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += ail * B(l, j);
    }
  return C;
}

inline Matrix transpose(const Matrix& A) {
  Matrix T(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

inline double frobenius_norm(const Matrix& A) {
  double s = 0.0;
  for (double x : A.a) s += x * x;
  return std::sqrt(s);
}

/// A * A^T (k x k Gram matrix of the rows).
inline Matrix gram_of_rows(const Matrix& A) {
  Matrix G(A.rows, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = i; j < A.rows; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < A.cols; ++l) s += A(i, l) * A(j, l);
      G(i, j) = s;
      G(j, i) = s;
    }
  return G;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending. Converges when the off-diagonal L1 mass drops below
/// 1e-14 * |trace|, at most 100 sweeps.
inline std::vector<double> symmetric_eigenvalues(Matrix S) {
  if (S.rows != S.cols) throw DimensionError("symmetric_eigenvalues: not square");
  const std::size_t n = S.rows;
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += std::abs(S(i, i));
  const double threshold = 1e-14 * trace;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(S(p, q));
    if (off <= threshold) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = S(p, q);
        if (apq == 0.0) continue;
        double theta = (S(q, q) - S(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (std::size_t l = 0; l < n; ++l) {
          double slp = S(l, p), slq = S(l, q);
          S(l, p) = c * slp - s * slq;
          S(l, q) = s * slp + c * slq;
        }
        for (std::size_t l = 0; l < n; ++l) {
          double spl = S(p, l), sql = S(q, l);
          S(p, l) = c * spl - s * sql;
          S(q, l) = s * spl + c * sql;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = S(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Orthonormalizes the rows of A in place by modified Gram-Schmidt; rows
/// whose residual falls below `tol` are zeroed. Returns the rank. The
/// surviving orthonormal rows are compacted to the top.
inline std::size_t orthonormalize_rows(Matrix& A, double tol) {
  std::size_t rank = 0;
  for (std::size_t i = 0; i < A.rows; ++i) {
    // Copy row i into the next free slot and orthogonalize twice for
    // numerical safety.
    for (std::size_t j = 0; j < A.cols; ++j) A(rank, j) = A(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t r = 0; r < rank; ++r) {
        double proj = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) proj += A(rank, j) * A(r, j);
        for (std::size_t j = 0; j < A.cols; ++j) A(rank, j) -= proj * A(r, j);
      }
    }
    double nrm = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) nrm += A(rank, j) * A(rank, j);
    nrm = std::sqrt(nrm);
    if (nrm > tol) {
      for (std::size_t j = 0; j < A.cols; ++j) A(rank, j) /= nrm;
      ++rank;
    }
  }
  for (std::size_t i = rank; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) A(i, j) = 0.0;
  return rank;
}

}  // namespace gcv
