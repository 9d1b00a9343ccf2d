#include "spi/transforms.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace spi {
namespace {

void require_pow2(std::size_t m, const char* what) {
  if (!is_pow2(m)) throw DimensionError(std::string(what) + ": length " + std::to_string(m) + " is not a power of 2");
}

void require_basis_grid(std::size_t index, std::size_t width, std::size_t height) {
  if (!is_pow2(width) || !is_pow2(height)) throw DimensionError("basis row: width and height must be powers of 2");
  if (index >= width * height) throw InvalidArgument("basis row: index out of range");
}

}  // namespace

void fast_wht_inplace(std::span<double> v) {
  require_pow2(v.size(), "fast_wht");
  const std::size_t m = v.size();
  const double s = std::numbers::sqrt2 / 2.0;
  for (std::size_t h = 1; h < m; h <<= 1) {
    for (std::size_t i = 0; i < m; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = (a + b) * s;
        v[j + h] = (a - b) * s;
      }
    }
  }
}

std::vector<double> fast_wht(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  fast_wht_inplace(out);
  return out;
}

namespace {

template <bool Conjugate>
void noiselet_butterfly(std::span<std::complex<double>> v) {
  require_pow2(v.size(), "fast_noiselet");
  const std::size_t m = v.size();
  // c = (1 - i)/2; stage kernel c*[[1, i], [i, 1]] (or its conjugate).
  const std::complex<double> c = Conjugate ? std::complex<double>(0.5, 0.5) : std::complex<double>(0.5, -0.5);
  const std::complex<double> i_unit = Conjugate ? std::complex<double>(0.0, -1.0) : std::complex<double>(0.0, 1.0);
  for (std::size_t h = 1; h < m; h <<= 1) {
    for (std::size_t i = 0; i < m; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const auto a = v[j];
        const auto b = v[j + h];
        v[j] = c * (a + i_unit * b);
        v[j + h] = c * (i_unit * a + b);
      }
    }
  }
}

}  // namespace

void fast_noiselet_inplace(std::span<std::complex<double>> v) { noiselet_butterfly<false>(v); }

void inverse_noiselet_inplace(std::span<std::complex<double>> v) { noiselet_butterfly<true>(v); }

std::vector<std::complex<double>> fast_noiselet(std::span<const std::complex<double>> v) {
  std::vector<std::complex<double>> out(v.begin(), v.end());
  fast_noiselet_inplace(out);
  return out;
}

RealGrid walsh_row_2d(std::size_t index, std::size_t width, std::size_t height) {
  require_basis_grid(index, width, height);
  // H is symmetric, so row j == H e_j.
  std::vector<double> e(width * height, 0.0);
  e[index] = 1.0;
  fast_wht_inplace(e);
  return RealGrid(width, height, std::move(e));
}

ComplexGrid noiselet_row_2d(std::size_t index, std::size_t width, std::size_t height) {
  require_basis_grid(index, width, height);
  std::vector<std::complex<double>> e(width * height, 0.0);
  e[index] = 1.0;
  fast_noiselet_inplace(e);
  return ComplexGrid(width, height, std::move(e));
}

ComplexGrid basis_row_2d(BasisKind kind, std::size_t index, std::size_t width, std::size_t height) {
  if (kind == BasisKind::Noiselet) return noiselet_row_2d(index, width, height);
  const auto r = walsh_row_2d(index, width, height);
  std::vector<std::complex<double>> c(r.values().begin(), r.values().end());
  return ComplexGrid(width, height, std::move(c));
}

}  // namespace spi
