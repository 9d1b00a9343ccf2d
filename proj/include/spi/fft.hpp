#pragma once

#include <complex>
#include <span>
#include <vector>

namespace spi {

// Unnormalized 2D DFTs over row-major grids with `height` rows of `width`
// samples. Forward uses exp(-2*pi*i*...), inverse exp(+2*pi*i*...).
// Plans are created with FFTW_ESTIMATE so results are reproducible run to run.

std::vector<std::complex<double>> dft2(std::span<const std::complex<double>> in, std::size_t width,
                                       std::size_t height, bool inverse = false);

/// Real-to-complex forward DFT. Output has height * (width/2 + 1) bins.
std::vector<std::complex<double>> rdft2(std::span<const double> in, std::size_t width, std::size_t height);

/// Inverse of rdft2 (unnormalized: irdft2(rdft2(x)) == width*height*x).
std::vector<double> irdft2(std::span<const std::complex<double>> half, std::size_t width, std::size_t height);

}  // namespace spi
