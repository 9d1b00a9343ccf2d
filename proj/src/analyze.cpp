#include "spi/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "spi/linalg.hpp"
#include "spi/recon.hpp"

namespace spi {
namespace {

void require_same(const Image& x, const Image& r, const char* what) {
  if (!x.same_shape(r)) throw DimensionError(std::string(what) + ": image dimensions differ");
}

std::size_t bin_of(const std::vector<double>& edges, double v) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const auto i = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(edges.size()) - 2));
}

std::vector<double> linear_edges(double lo, double hi, std::size_t bins) {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  e[bins] = hi;
  return e;
}

std::vector<double> log_edges(double lo, double hi, std::size_t bins) {
  auto e = linear_edges(std::log(lo), std::log(hi), bins);
  for (auto& v : e) v = std::exp(v);
  e.front() = lo;
  e.back() = hi;
  return e;
}

// Sum that does not depend on the order of the terms.
double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double mse(const Image& x, const Image& r) {
  require_same(x, r, "mse");
  double s = 0.0;
  const auto a = x.values();
  const auto b = r.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double psnr(const Image& x, const Image& r) {
  const double e = mse(x, r);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(r.values().begin(), r.values().end());
  return 10.0 * std::log10(peak * peak / e);
}

std::string format_psnr(double db) {
  if (std::isinf(db) && db > 0) return "inf";
  if (std::isnan(db)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", db);
  return buf;
}

double FeatureHistogram::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

std::vector<std::vector<double>> decomposition_coefficients(const RealMatrix& dictionary,
                                                            const std::vector<Image>& corpus, double rank_tol) {
  if (corpus.empty()) throw InvalidArgument("decompose: empty corpus");
  const std::size_t w = corpus.front().width();
  const std::size_t h = corpus.front().height();
  for (const auto& img : corpus)
    if (img.width() != w || img.height() != h) throw DimensionError("decompose: corpus images differ in size");
  if (dictionary.cols() != w * h) throw DimensionError("decompose: dictionary does not match image size");

  std::vector<std::vector<double>> out;
  out.reserve(corpus.size());
  if (dictionary.rows() > w * h) {
    // Overcomplete: M^T = U S V* is wide, and c = V S^+ U* x.
    const auto s = svd_wide(dictionary.transposed());
    std::size_t r = 0;
    while (r < s.s.size() && s.s[r] > rank_tol * s.s[0]) ++r;
    std::vector<double> t(w * h);
    for (const auto& img : corpus) {
      gemv(s.u, img.values(), t, true);
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = i < r ? t[i] / s.s[i] : 0.0;
      std::vector<double> c(dictionary.rows());
      gemv(s.vt, t, c, true);
      out.push_back(std::move(c));
    }
    return out;
  }

  const auto f = factorize(dictionary, w, h, rank_tol);
  const std::size_t r = f.effective_rank;
  const RealMatrix u = f.u_dense();
  std::vector<double> t(f.k(), 0.0);
  for (const auto& img : corpus) {
    std::fill(t.begin(), t.end(), 0.0);
    f.vt.forward(img.values(), t, r);
    for (std::size_t i = 0; i < r; ++i) t[i] /= f.d[i];
    std::vector<double> c(f.k());
    gemv(u, t, c);
    out.push_back(std::move(c));
  }
  return out;
}

FeatureHistogram bin_coefficients(const std::vector<std::vector<double>>& coeffs, const std::vector<RowMeta>& meta,
                                  const ParamDistribution& dist, const HistogramSpec& spec) {
  if (coeffs.empty()) throw InvalidArgument("decompose: empty corpus");
  if (spec.sigma_bins == 0 || spec.np_bins == 0) throw InvalidArgument("decompose: need at least one bin per axis");
  dist.validate();
  for (const auto& c : coeffs)
    if (c.size() != meta.size()) throw DimensionError("decompose: coefficient count does not match dictionary");

  FeatureHistogram hist;
  hist.sigma_edges = log_edges(dist.sigma_lo, dist.sigma_hi, spec.sigma_bins);
  hist.np_edges = linear_edges(dist.np_lo, dist.np_hi, spec.np_bins);
  hist.corpus_size = coeffs.size();
  hist.dict_size = meta.size();
  const std::size_t nb = spec.sigma_bins * spec.np_bins;
  const std::size_t tb = spec.theta_bins;
  if (tb > 0) hist.theta_edges = linear_edges(0.0, std::numbers::pi, tb);

  std::vector<std::size_t> bin(meta.size()), tbin(meta.size());
  hist.counts.assign(nb, 0);
  std::vector<std::size_t> tcounts(tb, 0);
  for (std::size_t j = 0; j < meta.size(); ++j) {
    const auto& p = meta[j].params;
    bin[j] = bin_of(hist.sigma_edges, p.sigma) * spec.np_bins + bin_of(hist.np_edges, p.n_p);
    ++hist.counts[bin[j]];
    if (tb > 0) {
      tbin[j] = bin_of(hist.theta_edges, p.theta);
      ++tcounts[tbin[j]];
    }
  }

  // Per-image partial sums, reduced per bin in sorted order so the corpus
  // order does not matter.
  std::vector<std::vector<double>> per_bin(nb), per_theta(tb);
  std::vector<double> acc(nb), tacc(tb);
  for (const auto& c : coeffs) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::fill(tacc.begin(), tacc.end(), 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      acc[bin[j]] += std::abs(c[j]);
      if (tb > 0) tacc[tbin[j]] += std::abs(c[j]);
    }
    for (std::size_t b = 0; b < nb; ++b) per_bin[b].push_back(acc[b]);
    for (std::size_t b = 0; b < tb; ++b) per_theta[b].push_back(tacc[b]);
  }
  const auto images = static_cast<double>(coeffs.size());
  hist.values.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b)
    if (hist.counts[b] > 0)
      hist.values[b] = sorted_sum(per_bin[b]) / (images * static_cast<double>(hist.counts[b]));
  hist.theta_values.assign(tb, 0.0);
  for (std::size_t b = 0; b < tb; ++b)
    if (tcounts[b] > 0) hist.theta_values[b] = sorted_sum(per_theta[b]) / (images * static_cast<double>(tcounts[b]));
  return hist;
}

FeatureHistogram decompose_features(const std::vector<Image>& corpus, std::size_t dict_size,
                                    const ParamDistribution& dist, std::uint64_t seed, const HistogramSpec& spec) {
  if (corpus.empty()) throw InvalidArgument("decompose: empty corpus");
  if (dict_size == 0) throw InvalidArgument("decompose: dict_size must be >= 1");
  auto dict = gen_morlet_dictionary(corpus.front().width(), corpus.front().height(), dict_size, dist, seed);
  const auto coeffs = decomposition_coefficients(dict.rows, corpus);
  auto hist = bin_coefficients(coeffs, dict.meta, dist, spec);
  return hist;
}

void write_histogram_csv(const FeatureHistogram& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "sigma_lo,sigma_hi,np_lo,np_hi,mean_abs_coeff\n";
  char buf[160];
  for (std::size_t s = 0; s < h.sigma_bins(); ++s)
    for (std::size_t p = 0; p < h.np_bins(); ++p) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.17g\n", h.sigma_edges[s], h.sigma_edges[s + 1],
                    h.np_edges[p], h.np_edges[p + 1], h.value(s, p));
      out << buf;
    }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace spi
