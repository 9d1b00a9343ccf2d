#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "spi/core.hpp"
#include "spi/hash.hpp"
#include "spi/patterns.hpp"

namespace spi {

/// Detector chain: source fluctuation -> additive detector noise -> ADC.
struct NoiseModel {
  double additive_sigma = 0.0;            // std of additive noise, fraction of the clean full scale
  int adc_bits = 0;                       // 0 disables quantization
  double source_fluctuation_sigma = 0.0;  // relative multiplicative fluctuation per sample
  std::uint64_t seed = 0;

  void validate() const;
  bool noiseless() const { return additive_sigma == 0.0 && adc_bits == 0 && source_fluctuation_sigma == 0.0; }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

struct Measurement {
  std::vector<double> values;                     // Y
  std::optional<std::vector<double>> values_bar;  // Y-bar, differential acquisitions only
  Digest pattern_set_hash;
  NoiseModel noise;
  std::size_t n = 0;         // pixel count of the pattern set
  double full_scale = 0.0;   // quantizer range, max |sample| after noise
  double additive_std = 0.0; // absolute std of the detector noise (additive_sigma * clean full scale)
  bool binary = false;       // taken through {0,1} rows

  std::size_t k() const { return values.size(); }
  double compression_ratio() const { return static_cast<double>(values.size()) / static_cast<double>(n); }
  bool differential() const { return values_bar.has_value(); }
};

/// Y_i = <X, row_i> plus noise. Noise for sample i is drawn from
/// derive_seed(nm.seed, i), so results do not depend on evaluation order.
Measurement measure(const Image& img, const PatternSet& ps, const NoiseModel& nm = {});

/// Both photodiodes: Y_i = <X, psi_i> and Y-bar_i = <X, 1 - psi_i>. The pair
/// shares the source fluctuation and gets independent detector noise.
Measurement measure_differential(const Image& img, const PatternSet& ps, const NoiseModel& nm = {});

/// Y - Y-bar, i.e. the measurement through the bipolar rows 2*psi - 1
/// (the all-ones row gives the total flux since its Y-bar is 0).
std::vector<double> combine_differential(const Measurement& m);

/// The vector the reconstruction consumes, i.e. the samples of the effective
/// rows. Differential: Y - Y-bar. Single-diode binary: 2*Y_i - Y_0 for i >= 1
/// (row 0 is all ones), Y_0 for i = 0. Otherwise the raw values.
std::vector<double> effective_values(const Measurement& m);

/// Per-sample std of the detector noise on effective_values(): sigma for plain
/// samples, sqrt(2)*sigma for Y - Y-bar, sqrt(5)*sigma for 2*Y_i - Y_0.
double effective_noise_std(const Measurement& m);

/// SPIM file: "SPIM", u16 version, u32 k, u8 flags (bit0 differential, bit1 binary rows),
/// f64 Y[k], [f64 Y-bar[k]], 32-byte pattern hash, noise record
/// (f64 additive_sigma, u32 adc_bits, f64 fluctuation, u64 seed),
/// u64 n, f64 full_scale, f64 additive_std.
std::vector<std::uint8_t> serialize(const Measurement& m);
Measurement deserialize_measurement(std::span<const std::uint8_t> data);
void save_measurement(const Measurement& m, const std::filesystem::path& path);
Measurement load_measurement(const std::filesystem::path& path);

/// CSV with header `index,value[,value_bar]`.
void write_measurement_csv(const Measurement& m, const std::filesystem::path& path);

}  // namespace spi
