#pragma once

#include <span>
#include <vector>

#include "spi/core.hpp"

namespace spi {

/// Thin SVD a = u * diag(s) * vt of a k x n matrix with k <= n.
struct WideSvd {
  RealMatrix u;           // k x k orthogonal
  std::vector<double> s;  // k, descending, >= 0
  RealMatrix vt;          // k x n, orthonormal rows
  bool used_householder = false;
};

/// Consumes `a` and reuses its storage for vt, so peak memory is one k x n
/// matrix plus O(k^2). Orthonormalizes the rows with two Cholesky-QR passes
/// when the Gram matrix is well conditioned, otherwise with Householder LQ,
/// then takes the SVD of the small triangular factor.
WideSvd svd_wide(RealMatrix a);

/// y = alpha * op(a) x + beta * y.
void gemv(const RealMatrix& a, std::span<const double> x, std::span<double> y, bool transpose = false,
          double alpha = 1.0, double beta = 0.0);

/// op(a) * op(b).
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b, bool transpose_a = false, bool transpose_b = false);

double frobenius_norm(const RealMatrix& a);
double frobenius_distance(const RealMatrix& a, const RealMatrix& b);

}  // namespace spi
