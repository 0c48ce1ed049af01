#pragma once

#include <cmath>

#include "gcv/error.hpp"
#include "gcv/linalg.hpp"

namespace gcv {

// The Rabier function nu(A) of a k x n matrix measures the distance of the
// operator to the set of singular (non-surjective) operators. Canonically
// nu(A) = min over unit phi in R^k of |A^T phi|, i.e. the smallest singular
// value of A computed from the k x k Gram matrix A A^T. Gram-based
// computation loses half the digits near nu ~ 0; downstream uses are
// threshold comparisons with z >= 1e-6, so this is acceptable and the
// tolerance contracts account for it.

using OperatorMatrix = Matrix;

inline double nu(const OperatorMatrix& A) {
  if (A.rows == 0 || A.cols == 0) throw DimensionError("nu: empty matrix");
  if (!A.all_finite()) throw NumericError("nu: non-finite entries");
  if (A.rows > A.cols) return 0.0;  // A^T phi has a nontrivial kernel
  auto eig = symmetric_eigenvalues(gram_of_rows(A));
  double lambda_min = eig.front();
  return lambda_min > 0.0 ? std::sqrt(lambda_min) : 0.0;
}

/// Kernel characterization: min |A v| over unit v orthogonal to ker A (the
/// row space). Agrees with nu on full-row-rank matrices; on rank-deficient
/// input the two characterizations diverge, so this throws instead.
inline double nu_kernel(const OperatorMatrix& A) {
  if (A.rows == 0 || A.cols == 0) throw DimensionError("nu_kernel: empty matrix");
  if (!A.all_finite()) throw NumericError("nu_kernel: non-finite entries");
  const double tol = 1e-10 * frobenius_norm(A);
  Matrix Q = A;
  std::size_t rank = orthonormalize_rows(Q, tol);
  if (rank < A.rows)
    throw RankDeficientError("nu_kernel requires full row rank (rank " +
                             std::to_string(rank) + " < k = " +
                             std::to_string(A.rows) + ")");
  // v = Q^T w ranges over the row space as w ranges over R^k; the minimum of
  // |A Q^T w| over unit w is the smallest singular value of B = A Q^T.
  Matrix B = matmul(A, transpose(Q));
  auto eig = symmetric_eigenvalues(gram_of_rows(transpose(B)));
  double lambda_min = eig.front();
  return lambda_min > 0.0 ? std::sqrt(lambda_min) : 0.0;
}

/// Independent closed-form oracle: smallest singular value via the
/// characteristic polynomial of A A^T, solvable for k <= 3 (k > n collapses
/// to zero for any size). Test-side cross-check for nu; not used by the
/// estimators.
inline double smallest_singular_oracle(const OperatorMatrix& A) {
  if (A.rows == 0 || A.cols == 0)
    throw DimensionError("smallest_singular_oracle: empty matrix");
  if (!A.all_finite())
    throw NumericError("smallest_singular_oracle: non-finite entries");
  if (A.rows > A.cols) return 0.0;
  if (A.rows > 3)
    throw NumericError("smallest_singular_oracle: closed form limited to k <= 3 or n <= 3");
  Matrix G = gram_of_rows(A);
  double lambda_min = 0.0;
  if (G.rows == 1) {
    lambda_min = G(0, 0);
  } else if (G.rows == 2) {
    const double a = G(0, 0), b = G(0, 1), d = G(1, 1);
    const double tr = a + d;
    const double gap = std::sqrt((a - d) * (a - d) + 4.0 * b * b);
    lambda_min = 0.5 * (tr - gap);
  } else {
    // Trigonometric solution of the symmetric 3x3 characteristic cubic.
    const double p1 = G(0, 1) * G(0, 1) + G(0, 2) * G(0, 2) + G(1, 2) * G(1, 2);
    if (p1 == 0.0) {
      lambda_min = std::min({G(0, 0), G(1, 1), G(2, 2)});
    } else {
      const double q = (G(0, 0) + G(1, 1) + G(2, 2)) / 3.0;
      const double p2 = (G(0, 0) - q) * (G(0, 0) - q) +
                        (G(1, 1) - q) * (G(1, 1) - q) +
                        (G(2, 2) - q) * (G(2, 2) - q) + 2.0 * p1;
      const double p = std::sqrt(p2 / 6.0);
      Matrix B(3, 3);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          B(i, j) = (G(i, j) - (i == j ? q : 0.0)) / p;
      double det = B(0, 0) * (B(1, 1) * B(2, 2) - B(1, 2) * B(2, 1)) -
                   B(0, 1) * (B(1, 0) * B(2, 2) - B(1, 2) * B(2, 0)) +
                   B(0, 2) * (B(1, 0) * B(2, 1) - B(1, 1) * B(2, 0));
      double r = std::min(1.0, std::max(-1.0, det / 2.0));
      double phi = std::acos(r) / 3.0;
      // Smallest eigenvalue corresponds to the phase shifted by 2*pi/3.
      lambda_min = q + 2.0 * p * std::cos(phi + 2.0 * 3.14159265358979323846 / 3.0);
    }
  }
  return lambda_min > 0.0 ? std::sqrt(lambda_min) : 0.0;
}

}  // namespace gcv
