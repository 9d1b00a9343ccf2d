#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spi/core.hpp"
#include "spi/patterns.hpp"

namespace spi {

double mse(const Image& x, const Image& r);

/// 10 log10(max(r)^2 / mse(x, r)); +infinity when the images are identical.
double psnr(const Image& x, const Image& r);

/// "inf" for +infinity, otherwise %.6f.
std::string format_psnr(double db);

struct HistogramSpec {
  std::size_t sigma_bins = 16;  // log-spaced
  std::size_t np_bins = 14;     // linear
  std::size_t theta_bins = 8;   // marginal over [0, pi)
};

/// Mean |c| of decomposition coefficients, binned over (sigma, n_p) and as a
/// theta marginal. `value(i, j)` averages over every (image, pattern) pair
/// whose pattern falls in sigma bin i and n_p bin j.
struct FeatureHistogram {
  std::vector<double> sigma_edges;  // sigma_bins + 1
  std::vector<double> np_edges;     // np_bins + 1
  std::vector<double> theta_edges;  // theta_bins + 1
  std::vector<double> values;       // sigma-major, sigma_bins * np_bins
  std::vector<std::size_t> counts;  // patterns per (sigma, n_p) bin
  std::vector<double> theta_values;
  std::size_t corpus_size = 0;
  std::size_t dict_size = 0;

  std::size_t sigma_bins() const { return sigma_edges.size() - 1; }
  std::size_t np_bins() const { return np_edges.size() - 1; }
  double value(std::size_t si, std::size_t ni) const { return values[si * np_bins() + ni]; }
  double total() const;
};

/// Coefficients c with x = sum_j c_j row_j in the least-squares, minimum-norm
/// sense: c = (M^T)^+ x = U D^-1 V* x for M = U D V*. Dictionaries with more
/// rows than pixels are handled through the SVD of M^T.
std::vector<std::vector<double>> decomposition_coefficients(const RealMatrix& dictionary,
                                                            const std::vector<Image>& corpus,
                                                            double rank_tol = 1e-10);

/// Builds a dict_size x n Morlet-real dictionary with gen_morlet_dictionary(),
/// decomposes every image, and averages |c| into bins.
FeatureHistogram decompose_features(const std::vector<Image>& corpus, std::size_t dict_size,
                                    const ParamDistribution& dist, std::uint64_t seed,
                                    const HistogramSpec& spec = {});

/// Bins precomputed coefficients (one vector per image, aligned with meta).
FeatureHistogram bin_coefficients(const std::vector<std::vector<double>>& coeffs, const std::vector<RowMeta>& meta,
                                  const ParamDistribution& dist, const HistogramSpec& spec = {});

/// `sigma_lo,sigma_hi,np_lo,np_hi,mean_abs_coeff`, one line per bin, sigma-major.
void write_histogram_csv(const FeatureHistogram& h, const std::filesystem::path& path);

}  // namespace spi
