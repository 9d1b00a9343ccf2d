#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "spi/wavelets.hpp"
#include "support/oracles.hpp"

using namespace spi;
using std::numbers::pi;

namespace {

std::complex<double> grid_sum(const ComplexGrid& g) {
  std::complex<double> s = 0;
  for (const auto& v : g.values()) s += v;
  return s;
}

double grid_norm(const ComplexGrid& g) {
  double s = 0;
  for (const auto& v : g.values()) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace

TEST(Gabor, ZeroFrequencyIsNormalizedGaussian) {
  GaborParams p{15.5, 15.5, 0.08, 0.0, 0.0};
  const auto g = gabor_filter(p, 32, 32);
  double s = 0;
  std::vector<double> ref(32 * 32);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) {
      const double dx = static_cast<double>(x) - 15.5, dy = static_cast<double>(y) - 15.5;
      ref[y * 32 + x] = std::exp(-pi * (dx * dx + dy * dy) * p.a * p.a);
      s += ref[y * 32 + x] * ref[y * 32 + x];
    }
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(g.values()[i].real(), ref[i] / std::sqrt(s), 1e-14);
    EXPECT_EQ(g.values()[i].imag(), 0.0);
    EXPECT_GT(g.values()[i].real(), 0.0);
  }
}

TEST(Gabor, UnitNormForRandomParams) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> c(0, 31), a(0.02, 0.5), f(-0.49, 0.49);
  for (int t = 0; t < 50; ++t) {
    const auto g = gabor_filter({c(rng), c(rng), a(rng), f(rng), f(rng)}, 32, 24);
    EXPECT_NEAR(grid_norm(g), 1.0, 1e-12);
  }
  EXPECT_THROW(gabor_filter({0, 0, 0.0, 0, 0}, 8, 8), InvalidArgument);
  EXPECT_THROW(gabor_filter({0, 0, 0.1, 0.5, 0}, 8, 8), InvalidArgument);
}

TEST(Gabor, SpectrumPeaksAtModulation) {
  const std::size_t m = 64;
  const double u0 = 10.0 / 64, v0 = -6.0 / 64;
  const auto g = gabor_filter({31.5, 31.5, 0.06, u0, v0}, m, m);
  const auto spec = oracle::dft2(g.vector(), m, m);
  std::size_t best = 0;
  for (std::size_t i = 1; i < spec.size(); ++i)
    if (std::abs(spec[i]) > std::abs(spec[best])) best = i;
  // Modulation exp(-2 pi i u0 x) shifts the spectrum to -u0 under the forward sign convention.
  const auto wrap = [&](double f) { return static_cast<std::size_t>(std::lround(std::fmod(-f * m + m, m))); };
  EXPECT_EQ(best % m, wrap(u0));
  EXPECT_EQ(best / m, wrap(v0));
}

TEST(Morlet, ZeroMeanUnitNorm) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> s(1.0, 8.0), th(0.0, pi);
  for (int t = 0; t < 200; ++t) {
    const double sigma = s(rng);
    std::uniform_real_distribution<double> np(0.1, 2 * sigma);
    const auto w = morlet_wavelet({sigma, np(rng), th(rng)}, 64, 48);
    EXPECT_LT(std::abs(grid_sum(w.grid)) / static_cast<double>(w.grid.size()), 1e-14);
    EXPECT_NEAR(grid_norm(w.grid), 1.0, 1e-12);
  }
}

TEST(Morlet, KappaApproachesContinuousLimit) {
  EXPECT_NEAR(continuous_kappa(1.0), 0.2912, 1e-4);
  // Fine-grid numerical integration of the zero-mean condition.
  for (double n_p : {0.5, 1.0, 1.7}) {
    const double sigma = 1.0, k = pi * n_p / (2 * sigma), h = 0.01;
    double num = 0, den = 0;
    for (double x = -10; x <= 10; x += h) {
      const double e = std::exp(-x * x / 2);
      num += e * std::cos(k * x);
      den += e;
    }
    EXPECT_NEAR(num / den, continuous_kappa(n_p), 1e-10);
  }
  for (double n_p : {0.5, 1.0, 2.0}) {
    const auto w = morlet_wavelet({12.0, n_p, 0.3}, 128, 128);
    EXPECT_NEAR(w.kappa.real(), continuous_kappa(n_p), 1e-6);
    EXPECT_NEAR(w.kappa.imag(), 0.0, 1e-10);
  }
}

TEST(Morlet, ThetaZeroSymmetricInY) {
  const auto w = morlet_wavelet({4.0, 1.5, 0.0}, 33, 32);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 33; ++x) EXPECT_NEAR(std::abs(w.grid(x, y) - w.grid(x, 31 - y)), 0.0, 1e-15);
}

TEST(Morlet, QuarterTurnIsTranspose) {
  const auto a = morlet_wavelet({5.0, 2.0, 0.0}, 40, 40);
  const auto b = morlet_wavelet({5.0, 2.0, pi / 2}, 40, 40);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 40; ++x) EXPECT_LT(std::abs(b.grid(x, y) - a.grid(y, x)), 1e-10);
}

TEST(Morlet, RejectsInvalidParams) {
  EXPECT_THROW(morlet_wavelet({0.0, 1.0, 0.0}, 16, 16), InvalidArgument);
  EXPECT_THROW(morlet_wavelet({2.0, -1.0, 0.0}, 16, 16), InvalidArgument);
  EXPECT_THROW(morlet_wavelet({2.0, 1.0, pi}, 16, 16), InvalidArgument);
  EXPECT_THROW(morlet_wavelet({2.0, 4.5, 0.0}, 16, 16), InvalidArgument);
  EXPECT_NO_THROW(morlet_wavelet({2.0, 4.0, 0.0}, 16, 16));
}

TEST(Morlet, FlagsEnvelopeThatDoesNotFit) {
  EXPECT_TRUE(morlet_wavelet({2.0, 1.0, 0.0}, 32, 32).envelope_fits);
  EXPECT_FALSE(morlet_wavelet({8.0, 1.0, 0.0}, 32, 32).envelope_fits);
}
