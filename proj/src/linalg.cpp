#include "spi/linalg.hpp"

#include "spi/blas.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace spi {
namespace {

constexpr double kCholeskyQrMinRcond = 1e-7;
constexpr std::size_t kColumnBlock = 512;

int as_int(std::size_t v) { return static_cast<int>(v); }

// Lower Cholesky factor of a * a^T, or false if it is not safely positive definite.
bool gram_cholesky(const double* a, std::size_t k, std::size_t n, std::vector<double>& l) {
  l.assign(k * k, 0.0);
  cblas_dsyrk(CblasRowMajor, CblasLower, CblasNoTrans, as_int(k), as_int(n), 1.0, a, as_int(n), 0.0, l.data(),
              as_int(k));
  if (LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', as_int(k), l.data(), as_int(k)) != 0) return false;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = r + 1; c < k; ++c) l[r * k + c] = 0.0;
  // Row-major lower L is column-major upper L^T (the row-major dtrcon wrapper
  // frees a bad pointer in some LAPACKE builds).
  double rcond = 0.0;
  if (LAPACKE_dtrcon(LAPACK_COL_MAJOR, 'I', 'U', 'N', as_int(k), l.data(), as_int(k), &rcond) != 0) return false;
  return rcond > kCholeskyQrMinRcond;
}

// Householder LQ in place; a row-major k x n is the column-major n x k matrix a^T.
void householder_lq(double* a, std::size_t k, std::size_t n, std::vector<double>& l) {
  std::vector<double> tau(k);
  if (LAPACKE_dgeqrf(LAPACK_COL_MAJOR, as_int(n), as_int(k), a, as_int(n), tau.data()) != 0)
    throw Error("svd: dgeqrf failed");
  // a^T = Q R, so a = R^T Q^T and L = R^T. Column-major R(i, j) sits at a[j*n + i].
  l.assign(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i <= j; ++i) l[j * k + i] = a[j * n + i];
  if (LAPACKE_dorgqr(LAPACK_COL_MAJOR, as_int(n), as_int(k), as_int(k), a, as_int(n), tau.data()) != 0)
    throw Error("svd: dorgqr failed");
}

}  // namespace

WideSvd svd_wide(RealMatrix a) {
  const std::size_t k = a.rows();
  const std::size_t n = a.cols();
  if (k == 0 || n == 0) throw DimensionError("svd: empty matrix");
  if (k > n) throw DimensionError("svd: expected rows <= cols");
  require_working_blas();
  const int ki = as_int(k);
  const int ni = as_int(n);

  WideSvd out;
  // Reduce to a = L Q with orthonormal rows of Q stored in `a`.
  std::vector<double> l;
  std::vector<double> l1;
  if (gram_cholesky(a.data(), k, n, l1)) {
    cblas_dtrsm(CblasRowMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit, ki, ni, 1.0, l1.data(), ki,
                a.data(), ni);
    std::vector<double> l2;
    if (gram_cholesky(a.data(), k, n, l2)) {
      cblas_dtrsm(CblasRowMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit, ki, ni, 1.0, l2.data(), ki,
                  a.data(), ni);
    } else {
      householder_lq(a.data(), k, n, l2);
      out.used_householder = true;
    }
    cblas_dtrmm(CblasRowMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit, ki, ki, 1.0, l1.data(), ki,
                l2.data(), ki);
    l = std::move(l2);
  } else {
    householder_lq(a.data(), k, n, l);
    out.used_householder = true;
  }

  // L = Ur S Wt, hence a = Ur S (Wt Q).
  out.u = RealMatrix(k, k);
  out.s.assign(k, 0.0);
  std::vector<double> wt(k * k);
  if (LAPACKE_dgesdd(LAPACK_ROW_MAJOR, 'A', ki, ki, l.data(), ki, out.s.data(), out.u.data(), ki, wt.data(), ki) != 0)
    throw Error("svd: dgesdd did not converge");

  const std::size_t block = std::min(kColumnBlock, n);
  std::vector<double> tmp(k * block);
  for (std::size_t c0 = 0; c0 < n; c0 += block) {
    const std::size_t b = std::min(block, n - c0);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, ki, as_int(b), ki, 1.0, wt.data(), ki, a.data() + c0, ni,
                0.0, tmp.data(), as_int(b));
    for (std::size_t r = 0; r < k; ++r) std::copy_n(tmp.data() + r * b, b, a.data() + r * n + c0);
  }
  out.vt = std::move(a);
  return out;
}

void gemv(const RealMatrix& a, std::span<const double> x, std::span<double> y, bool transpose, double alpha,
          double beta) {
  const std::size_t in = transpose ? a.rows() : a.cols();
  const std::size_t outn = transpose ? a.cols() : a.rows();
  if (x.size() != in || y.size() != outn) throw DimensionError("gemv: shape mismatch");
  cblas_dgemv(CblasRowMajor, transpose ? CblasTrans : CblasNoTrans, as_int(a.rows()), as_int(a.cols()), alpha,
              a.data(), as_int(a.cols()), x.data(), 1, beta, y.data(), 1);
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b, bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t ka = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t nn = transpose_b ? b.rows() : b.cols();
  if (ka != kb) throw DimensionError("matmul: inner dimensions differ");
  RealMatrix c(m, nn);
  if (m == 0 || nn == 0) return c;
  require_working_blas();
  cblas_dgemm(CblasRowMajor, transpose_a ? CblasTrans : CblasNoTrans, transpose_b ? CblasTrans : CblasNoTrans,
              as_int(m), as_int(nn), as_int(ka), 1.0, a.data(), as_int(a.cols()), b.data(), as_int(b.cols()), 0.0,
              c.data(), as_int(nn));
  return c;
}

double frobenius_norm(const RealMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double frobenius_distance(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("frobenius_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace spi
