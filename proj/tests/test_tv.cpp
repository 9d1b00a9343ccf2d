#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "spi/analyze.hpp"
#include "spi/sweep.hpp"
#include "spi/tv.hpp"
#include "support/oracles.hpp"

using namespace spi;

namespace {

Image phantom(std::size_t s) {
  // Four constant blocks on a background.
  Image img = Image::constant(s, s, 0.1);
  const auto fill = [&](std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, double v) {
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) img(x, y) = v;
  };
  fill(s / 8, s / 8, s / 2, s / 3, 0.9);
  fill(s / 2 + 4, s / 8, 7 * s / 8, s / 2, 0.6);
  fill(s / 8, s / 2, s / 3, 7 * s / 8, 0.4);
  fill(s / 2, 2 * s / 3, 7 * s / 8, 7 * s / 8, 0.75);
  return img;
}

double residual(const SvdFactors& f, const std::vector<double>& y, const Image& x) {
  const auto yr = f.reduced_measurement(y);
  std::vector<double> ax(f.effective_rank);
  f.vt.forward(x.values(), ax, f.effective_rank);
  double s = 0;
  for (std::size_t i = 0; i < ax.size(); ++i) s += (ax[i] - yr[i]) * (ax[i] - yr[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(TotalVariation, MatchesOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  std::vector<double> x(7 * 5);
  for (auto& v : x) v = u(rng);
  EXPECT_NEAR(total_variation(x, 7, 5), oracle::tv(x, 7, 5), 1e-12);
  EXPECT_EQ(total_variation(std::vector<double>(20, 0.3), 5, 4), 0.0);
}

TEST(SmoothedTv, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> x(6 * 6), g(36);
  for (auto& v : x) v = u(rng);
  const double mu = 0.05;
  const double f0 = smoothed_tv(x, 6, 6, mu, g);
  EXPECT_LE(f0, total_variation(x, 6, 6));
  EXPECT_GE(f0, total_variation(x, 6, 6) - mu * 36);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    const double fd = (smoothed_tv(xp, 6, 6, mu, {}) - smoothed_tv(xm, 6, 6, mu, {})) / 2e-6;
    EXPECT_NEAR(g[i], fd, 1e-6);
  }
}

TEST(TvReconstruct, ConstantImageRecoveredExactly) {
  const auto img = Image::constant(32, 32, 0.37);
  for (auto kind : {PatternKind::MorletBinary, PatternKind::MorletReal, PatternKind::WalshHadamard}) {
    const auto ps = gen_pattern_set(kind, 32, 32, 60, ParamDistribution::defaults(32, 32), 4);
    const auto f = factorize(ps);
    const auto m = kind == PatternKind::MorletBinary ? measure_differential(img, ps) : measure(img, ps);
    TvOptions opts;
    opts.epsilon = 0.0;
    const auto r = tv_reconstruct(f, m, opts);
    for (double v : r.image.values()) ASSERT_NEAR(v, 0.37, 1e-6) << to_string(kind);
  }
}

TEST(TvReconstruct, DeterminedSystemEqualsPinv) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  Image img(16, 16);
  for (auto& v : img.values()) v = u(rng);
  const auto ps = gen_pattern_set(PatternKind::Noiselet, 16, 16, 256, ParamDistribution{}, 5);
  const auto f = factorize(ps);
  const auto m = measure(img, ps);
  const auto tv = tv_reconstruct(f, m).image;
  const auto pinv = pinv_reconstruct(f, m.values);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(tv.values()[i], pinv.values()[i], 1e-4);
}

TEST(TvReconstruct, PhantomFromBinaryPatterns) {
  const std::size_t s = 64;
  const auto img = phantom(s);
  const auto ps = gen_pattern_set(PatternKind::MorletBinary, s, s, rows_for(0.15, s * s), ParamDistribution::defaults(s, s),
                                  13);
  const auto f = factorize(ps);
  const auto m = measure_differential(img, ps);
  const auto r = tv_reconstruct(f, m);
  EXPECT_GT(psnr(r.image, img), 40.0);
  EXPECT_LT(residual(f, effective_values(m), r.image), 1e-6 * std::sqrt(static_cast<double>(f.effective_rank)));

  // Independent solver on the same reduced system: the TV it reaches is an
  // upper bound for a minimizer, so NESTA must not be worse.
  const std::size_t rank = f.effective_rank;
  oracle::MatrixXd a = oracle::to_eigen(f.vt.materialize()).topRows(static_cast<Eigen::Index>(rank));
  const auto yr = f.reduced_measurement(effective_values(m));
  const Eigen::Map<const oracle::VectorXd> b(yr.data(), static_cast<Eigen::Index>(rank));
  const auto ref = oracle::tv_projected_subgradient(a, b, s, s, 3000);
  const double tv_ref = oracle::tv(ref, s, s);
  EXPECT_LE(total_variation(r.image), tv_ref * (1 + 1e-3));
  EXPECT_NEAR(total_variation(r.image), total_variation(img), 0.05 * total_variation(img));
}

TEST(TvReconstruct, StageObjectiveIsMonotone) {
  const std::size_t s = 32;
  const auto img = phantom(s);
  const auto ps = gen_pattern_set(PatternKind::MorletReal, s, s, 200, ParamDistribution::defaults(s, s), 2);
  const auto r = tv_reconstruct(factorize(ps), measure(img, ps));
  ASSERT_EQ(r.stage_tv.size(), 5u);
  for (std::size_t i = 1; i < r.stage_tv.size(); ++i) EXPECT_LE(r.stage_tv[i], r.stage_tv[i - 1] * (1 + 1e-9));
  EXPECT_TRUE(r.converged);
}

TEST(TvReconstruct, NoisyMeasurementStaysInsideEpsilonBall) {
  const std::size_t s = 32;
  const auto img = phantom(s);
  const auto ps = gen_pattern_set(PatternKind::MorletBinary, s, s, 150, ParamDistribution::defaults(s, s), 6);
  const auto f = factorize(ps);
  const auto m = measure_differential(img, ps, NoiseModel{1e-2, 0, 0.0, 4});
  const auto r = tv_reconstruct(f, m);
  EXPECT_NEAR(r.epsilon, noise_epsilon(f, effective_noise_std(m)), 1e-15);
  EXPECT_GT(r.epsilon, 0.0);
  EXPECT_LE(residual(f, effective_values(m), r.image), r.epsilon * (1 + 1e-6));
}

TEST(TvReconstruct, EpsilonReducesToSqrtKForOrthonormalSets) {
  const auto ps = gen_pattern_set(PatternKind::WalshHadamard, 16, 16, 49, ParamDistribution{}, 1);
  EXPECT_NEAR(noise_epsilon(factorize(ps), 0.2), 0.2 * 7.0, 1e-12);
}

TEST(TvReconstruct, RejectsForeignMeasurement) {
  const auto a = gen_pattern_set(PatternKind::MorletReal, 8, 8, 10, ParamDistribution::defaults(8, 8), 1);
  const auto b = gen_pattern_set(PatternKind::MorletReal, 8, 8, 10, ParamDistribution::defaults(8, 8), 2);
  EXPECT_THROW(tv_reconstruct(factorize(a), measure(Image::constant(8, 8, 1.0), b)), HashMismatchError);
  TvOptions bad;
  bad.stages = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(TvReconstructBatch, LanesAreIndependentAndMatchSingleSolves) {
  const std::size_t s = 32;
  const auto ps = gen_pattern_set(PatternKind::MorletReal, s, s, 220, ParamDistribution::defaults(s, s), 9);
  const auto f = factorize(ps);
  std::vector<Measurement> ms;
  for (int i = 0; i < 3; ++i) {
    auto img = phantom(s);
    for (auto& v : img.values()) v = std::clamp(v + 0.1 * i, 0.0, 1.0);
    ms.push_back(measure(img, ps, NoiseModel{i == 2 ? 1e-3 : 0.0, 0, 0.0, 5}));
  }
  TvOptions opts;
  opts.max_iterations = 400;
  const auto all = tv_reconstruct_batch(f, ms, opts);
  ASSERT_EQ(all.size(), 3u);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto alone = tv_reconstruct_batch(f, std::span(&ms[i], 1), opts);
    EXPECT_TRUE(std::ranges::equal(alone.front().image.values(), all[i].image.values()));
    EXPECT_EQ(alone.front().stage_iterations, all[i].stage_iterations);
    const auto single = tv_reconstruct(f, ms[i], opts);
    EXPECT_EQ(single.stage_iterations.size(), all[i].stage_iterations.size());
    double d = 0.0;
    for (std::size_t p = 0; p < s * s; ++p) d = std::max(d, std::abs(single.image.values()[p] - all[i].image.values()[p]));
    EXPECT_LT(d, 1e-6);
  }
}
