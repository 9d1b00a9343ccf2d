#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spi/acquire.hpp"
#include "spi/core.hpp"
#include "spi/recon.hpp"

namespace spi {

/// Isotropic total variation with forward differences and a reflexive
/// (zero-difference) boundary.
double total_variation(std::span<const double> x, std::size_t width, std::size_t height);
inline double total_variation(const RealGrid& g) { return total_variation(g.values(), g.width(), g.height()); }

/// Huber-smoothed TV f_mu and its gradient (grad may be empty).
double smoothed_tv(std::span<const double> x, std::size_t width, std::size_t height, double mu, std::span<double> grad);

struct TvOptions {
  std::size_t stages = 5;
  double mu_start = 0.1;           // first smoothing, as a fraction of the initial dynamic range
  double mu_final = 1e-4;          // last smoothing, same units
  double tol = 1e-6;               // relative change of f_mu over the last 10 iterations
  std::size_t max_iterations = 3000;  // per stage
  std::optional<double> epsilon;   // data-fit radius on the reduced system; 0 when unset

  void validate() const;
};

struct TvResult {
  Image image;
  bool converged = false;  // false when the final stage hit max_iterations
  std::size_t iterations = 0;
  std::vector<std::size_t> stage_iterations;
  std::vector<double> stage_tv;  // TV of the iterate at the end of each stage
  double epsilon = 0.0;
};

/// min TV(x) s.t. ||D^-1 U* y - V* x|| <= epsilon, solved with Nesterov's
/// smoothed gradient method and continuation in mu. Uses the rows of V* above
/// the rank cutoff; V* having orthonormal rows makes the projection exact.
TvResult tv_reconstruct(const SvdFactors& f, std::span<const double> y, const TvOptions& opts = {});

/// Same, with epsilon taken from the measurement's noise when not given:
/// the detector std propagated through D^-1 U*, sigma * sqrt(sum 1/d_i^2).
TvResult tv_reconstruct(const SvdFactors& f, const Measurement& m, TvOptions opts = {});

/// Columns per dense product in tv_reconstruct_batch.
inline constexpr std::size_t kTvBatchWidth = 16;

/// tv_reconstruct for several measurements of one pattern set, run in
/// lockstep so each pass over a dense V* serves up to kTvBatchWidth of them.
/// Each result depends only on its own measurement.
std::vector<TvResult> tv_reconstruct_batch(const SvdFactors& f, std::span<const Measurement> ms,
                                           const TvOptions& opts = {});

/// sigma * sqrt(sum over the effective rank of 1/d_i^2).
double noise_epsilon(const SvdFactors& f, double sigma);

}  // namespace spi
