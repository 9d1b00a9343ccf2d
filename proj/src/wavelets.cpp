#include "spi/wavelets.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace spi {

using std::numbers::pi;

void validate(const GaborParams& p) {
  if (!(p.a > 0.0) || !std::isfinite(p.a)) throw InvalidArgument("gabor: envelope scale a must be > 0");
  if (!(std::abs(p.u0) < 0.5) || !(std::abs(p.v0) < 0.5))
    throw InvalidArgument("gabor: |u0| and |v0| must be below 0.5 cycles/pixel");
  if (!std::isfinite(p.x0) || !std::isfinite(p.y0)) throw InvalidArgument("gabor: center must be finite");
}

void validate(const MorletParams& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw InvalidArgument("morlet: sigma must be > 0");
  if (!(p.n_p > 0.0) || !std::isfinite(p.n_p)) throw InvalidArgument("morlet: n_p must be > 0");
  if (!(p.theta >= 0.0 && p.theta < pi)) throw InvalidArgument("morlet: theta must be in [0, pi)");
  if (p.n_p > 2.0 * p.sigma)
    throw InvalidArgument("morlet: n_p=" + std::to_string(p.n_p) + " exceeds 2*sigma (aliased modulation)");
}

ComplexGrid gabor_filter(const GaborParams& p, std::size_t width, std::size_t height) {
  validate(p);
  ComplexGrid g(width, height);
  double energy = 0.0;
  const double a2 = p.a * p.a;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - p.x0;
      const double dy = static_cast<double>(y) - p.y0;
      const double env = std::exp(-pi * (dx * dx + dy * dy) * a2);
      const double phase = -2.0 * pi * (p.u0 * dx + p.v0 * dy);
      g(x, y) = std::polar(env, phase);
      energy += env * env;
    }
  }
  if (!(energy > 0.0)) throw InvalidArgument("gabor: envelope underflows on this grid");
  const double n = 1.0 / std::sqrt(energy);
  for (auto& v : g.values()) v *= n;
  return g;
}

MorletWavelet morlet_wavelet(const MorletParams& p, std::size_t width, std::size_t height) {
  validate(p);
  if (width == 0 || height == 0) throw DimensionError("morlet: empty grid");
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double k = pi * p.n_p / (2.0 * p.sigma);
  const double kx = k * std::cos(p.theta);
  const double ky = k * std::sin(p.theta);
  const double inv2s2 = 1.0 / (2.0 * p.sigma * p.sigma);

  // The envelope and carrier are separable; precompute per-axis factors.
  std::vector<double> ex(width), ey(height);
  std::vector<std::complex<double>> px(width), py(height);
  for (std::size_t x = 0; x < width; ++x) {
    const double dx = static_cast<double>(x) - cx;
    ex[x] = std::exp(-dx * dx * inv2s2);
    px[x] = std::polar(1.0, kx * dx);
  }
  for (std::size_t y = 0; y < height; ++y) {
    const double dy = static_cast<double>(y) - cy;
    ey[y] = std::exp(-dy * dy * inv2s2);
    py[y] = std::polar(1.0, ky * dy);
  }

  // kappa = sum(G e^{i phi}) / sum(G) makes the mean vanish.
  double env_sum = 0.0;
  std::complex<double> carrier_sum = 0.0;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double env = ey[y] * ex[x];
      env_sum += env;
      carrier_sum += env * (py[y] * px[x]);
    }
  if (!(env_sum > 0.0)) throw InvalidArgument("morlet: envelope underflows on this grid");
  const std::complex<double> kappa = carrier_sum / env_sum;

  ComplexGrid g(width, height);
  double energy = 0.0;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const auto v = ey[y] * ex[x] * (py[y] * px[x] - kappa);
      g(x, y) = v;
      energy += std::norm(v);
    }
  const double norm = 1.0 / std::sqrt(energy);

  // Remove the rounding residue of the mean after scaling.
  std::complex<double> mean = 0.0;
  for (auto& v : g.values()) {
    v *= norm;
    mean += v;
  }
  mean /= static_cast<double>(g.size());
  for (auto& v : g.values()) v -= mean;

  const double border = std::exp(-std::pow(std::min(cx, cy), 2) * inv2s2);
  return MorletWavelet{std::move(g), kappa, norm, border < 1e-8};
}

double continuous_kappa(double n_p) {
  const double t = pi * n_p / 2.0;
  return std::exp(-t * t / 2.0);
}

}  // namespace spi
