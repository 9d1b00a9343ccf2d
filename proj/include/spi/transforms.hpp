#pragma once

#include <complex>
#include <span>
#include <vector>

#include "spi/core.hpp"

namespace spi {

constexpr bool is_pow2(std::size_t m) { return m != 0 && (m & (m - 1)) == 0; }

/// In-place orthonormal Walsh-Hadamard transform (natural/Sylvester order),
/// H_2m = H_2 (x) H_m with H_2 = [[1, 1], [1, -1]] / sqrt(2). Length must be 2^p.
void fast_wht_inplace(std::span<double> v);
std::vector<double> fast_wht(std::span<const double> v);

/// In-place noiselet transform, H_2m = H_2 (x) H_m with H_2 = (1-i)/2 [[1, i], [i, 1]].
/// The matrix is unitary and symmetric; its inverse is the conjugate transform.
void fast_noiselet_inplace(std::span<std::complex<double>> v);
std::vector<std::complex<double>> fast_noiselet(std::span<const std::complex<double>> v);

/// Inverse noiselet transform: conj(H) v.
void inverse_noiselet_inplace(std::span<std::complex<double>> v);

enum class BasisKind { WalshHadamard, Noiselet };

// The 2D transform H_h (x) H_w acting on a row-major grid equals the 1D
// transform of length w*h, because both bases are Kronecker powers of H_2.

/// Row `index` of the 2D Walsh-Hadamard matrix, as a grid. Entries are +-1/sqrt(n).
RealGrid walsh_row_2d(std::size_t index, std::size_t width, std::size_t height);

/// Row `index` of the 2D noiselet matrix, as a grid.
ComplexGrid noiselet_row_2d(std::size_t index, std::size_t width, std::size_t height);

/// Either of the above, materialized as a complex grid.
ComplexGrid basis_row_2d(BasisKind kind, std::size_t index, std::size_t width, std::size_t height);

}  // namespace spi
