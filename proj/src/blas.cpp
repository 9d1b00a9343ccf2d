#include "spi/blas.hpp"

#include <cblas.h>
#include <lapacke.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "spi/core.hpp"

namespace spi {
namespace {

constexpr const char* kReexecGuard = "SPI_BLAS_REEXEC";

double pseudo_random(std::size_t i) { return std::sin(0.7 * static_cast<double>(i) + 0.3) + 0.01 * static_cast<double>(i % 7); }

bool gemm_ok(int m, int n, int k) {
  std::vector<double> a(static_cast<std::size_t>(m * k)), b(static_cast<std::size_t>(k * n)),
      c(static_cast<std::size_t>(m * n));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = pseudo_random(i);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = pseudo_random(i + 11);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, c.data(), n);
  double err = 0.0, scale = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a[static_cast<std::size_t>(i * k + p)] * b[static_cast<std::size_t>(p * n + j)];
      err = std::max(err, std::abs(s - c[static_cast<std::size_t>(i * n + j)]));
      scale = std::max(scale, std::abs(s));
    }
  return err <= 1e-12 * scale * k;
}

bool potrf_ok(int k) {
  // G = B B^T + k I is well conditioned.
  std::vector<double> g(static_cast<std::size_t>(k * k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double s = i == j ? k : 0.0;
      for (int p = 0; p < k; ++p)
        s += pseudo_random(static_cast<std::size_t>(i * k + p)) * pseudo_random(static_cast<std::size_t>(j * k + p));
      g[static_cast<std::size_t>(i * k + j)] = s;
    }
  auto l = g;
  if (LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', k, l.data(), k) != 0) return false;
  double err = 0.0, scale = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int p = 0; p <= j; ++p) s += l[static_cast<std::size_t>(i * k + p)] * l[static_cast<std::size_t>(j * k + p)];
      err = std::max(err, std::abs(s - g[static_cast<std::size_t>(i * k + j)]));
      scale = std::max(scale, std::abs(g[static_cast<std::size_t>(i * k + j)]));
    }
  return err <= 1e-12 * scale;
}

}  // namespace

std::string blas_core() {
  const char* name = openblas_get_corename();
  return name ? name : "unknown";
}

bool blas_self_test() {
  static const bool ok = gemm_ok(7, 5, 3) && gemm_ok(300, 300, 300) && gemm_ok(129, 67, 513) && potrf_ok(8) &&
                         potrf_ok(64) && potrf_ok(200);
  return ok;
}

void require_working_blas() {
  if (blas_self_test()) return;
  throw Error("BLAS self test failed with kernel set '" + blas_core() +
              "'; set OPENBLAS_CORETYPE (e.g. SkylakeX or Haswell) and rerun");
}

void ensure_working_blas(char** argv) {
  if (std::getenv("OPENBLAS_CORETYPE") || std::getenv(kReexecGuard)) return;
  if (blas_self_test()) return;
  std::string core = blas_core();
  std::transform(core.begin(), core.end(), core.begin(), [](unsigned char c) { return std::tolower(c); });
  const char* fallback = (core == "cooperlake" || core == "sapphirerapids") ? "SkylakeX" : "Haswell";
  setenv("OPENBLAS_CORETYPE", fallback, 1);
  setenv(kReexecGuard, "1", 1);
  execv("/proc/self/exe", argv);
  // exec failed: carry on and let require_working_blas() report it.
}

}  // namespace spi
