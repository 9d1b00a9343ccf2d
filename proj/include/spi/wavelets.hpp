#pragma once

#include <complex>

#include "spi/core.hpp"

namespace spi {

/// Gaussian envelope modulated by a plane wave.
struct GaborParams {
  double x0 = 0.0;  // center, pixels
  double y0 = 0.0;
  double a = 0.1;   // envelope scale, 1/pixels
  double u0 = 0.0;  // modulation, cycles/pixel; |u0|, |v0| < 0.5
  double v0 = 0.0;
};

struct MorletParams {
  double sigma = 4.0;  // Gaussian envelope std, pixels
  double n_p = 1.0;    // periods within the envelope
  double theta = 0.0;  // modulation orientation, radians in [0, pi)

  friend bool operator==(const MorletParams&, const MorletParams&) = default;
};

void validate(const GaborParams& p);
/// Throws InvalidArgument unless sigma > 0, n_p > 0, theta in [0, pi) and
/// the modulation pi*n_p/(2*sigma) stays at or below pi rad/pixel (n_p <= 2*sigma).
void validate(const MorletParams& p);

/// Gabor filter sampled at integer pixel centers, scaled to unit L2 norm.
ComplexGrid gabor_filter(const GaborParams& p, std::size_t width, std::size_t height);

struct MorletWavelet {
  ComplexGrid grid;
  std::complex<double> kappa;  // offset that zeroes the discrete mean
  double norm = 0.0;           // N, scales the discrete L2 norm to 1
  bool envelope_fits = true;   // false when the envelope is not below 1e-8 at the border
};

/// Morlet wavelet N*exp(-(x^2+y^2)/(2 sigma^2)) * (exp(i k (x cos t + y sin t)) - kappa)
/// with k = pi*n_p/(2 sigma), centered at ((width-1)/2, (height-1)/2). kappa and N
/// are solved on the discrete grid, so the sampled wavelet has zero mean and unit norm.
MorletWavelet morlet_wavelet(const MorletParams& p, std::size_t width, std::size_t height);

/// Closed-form kappa of the continuous wavelet, exp(-(pi*n_p/2)^2 / 2).
double continuous_kappa(double n_p);

}  // namespace spi
