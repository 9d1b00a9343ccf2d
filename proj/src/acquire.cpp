#include "spi/acquire.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "binio.hpp"
#include "spi/rng.hpp"

namespace spi {
namespace {

constexpr std::string_view kMagic = "SPIM";
constexpr std::uint16_t kVersion = 1;

void require_match(const Image& img, const PatternSet& ps) {
  if (img.width() != ps.width() || img.height() != ps.height())
    throw DimensionError("measure: image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                         " does not match pattern set " + std::to_string(ps.width()) + "x" +
                         std::to_string(ps.height()));
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void quantize(std::span<double> v, int bits, double full_scale) {
  if (bits == 0 || full_scale == 0.0) return;
  const double step = full_scale / std::ldexp(1.0, bits);
  for (double& x : v) x = std::round(x / step) * step;
}

}  // namespace

void NoiseModel::validate() const {
  if (!(additive_sigma >= 0.0) || !std::isfinite(additive_sigma))
    throw InvalidArgument("noise: additive_sigma must be >= 0");
  if (adc_bits < 0 || adc_bits > 24) throw InvalidArgument("noise: adc_bits must be in [0, 24]");
  if (!(source_fluctuation_sigma >= 0.0) || !std::isfinite(source_fluctuation_sigma))
    throw InvalidArgument("noise: source_fluctuation_sigma must be >= 0");
}

Measurement measure(const Image& img, const PatternSet& ps, const NoiseModel& nm) {
  nm.validate();
  require_match(img, ps);
  auto y = project(ps, img.values());

  Measurement m;
  m.pattern_set_hash = ps.hash();
  m.noise = nm;
  m.n = ps.n();
  m.binary = is_binary(ps.kind());
  m.additive_std = nm.additive_sigma * max_abs(y);
  if (nm.additive_sigma > 0.0 || nm.source_fluctuation_sigma > 0.0) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      Rng rng(derive_seed(nm.seed, i));
      std::normal_distribution<double> normal(0.0, 1.0);
      const double fluctuation = normal(rng);
      const double detector = normal(rng);
      y[i] = y[i] * (1.0 + nm.source_fluctuation_sigma * fluctuation) + m.additive_std * detector;
    }
  }
  m.full_scale = max_abs(y);
  quantize(y, nm.adc_bits, m.full_scale);
  m.values = std::move(y);
  return m;
}

Measurement measure_differential(const Image& img, const PatternSet& ps, const NoiseModel& nm) {
  nm.validate();
  require_match(img, ps);
  if (!is_binary(ps.kind())) throw InvalidArgument("measure_differential: pattern set is not binary");
  auto y = project(ps, img.values());
  const double flux = std::accumulate(img.values().begin(), img.values().end(), 0.0);
  std::vector<double> y_bar(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y_bar[i] = flux - y[i];
  // Complementary mirrors: the all-ones row sends nothing to the second diode.
  y_bar[0] = 0.0;

  Measurement m;
  m.pattern_set_hash = ps.hash();
  m.noise = nm;
  m.n = ps.n();
  m.binary = true;
  m.additive_std = nm.additive_sigma * std::max(max_abs(y), max_abs(y_bar));
  if (nm.additive_sigma > 0.0 || nm.source_fluctuation_sigma > 0.0) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      Rng rng(derive_seed(nm.seed, i));
      std::normal_distribution<double> normal(0.0, 1.0);
      const double gain = 1.0 + nm.source_fluctuation_sigma * normal(rng);
      const double d1 = normal(rng);
      const double d2 = normal(rng);
      y[i] = y[i] * gain + m.additive_std * d1;
      y_bar[i] = y_bar[i] * gain + m.additive_std * d2;
    }
  }
  m.full_scale = std::max(max_abs(y), max_abs(y_bar));
  quantize(y, nm.adc_bits, m.full_scale);
  quantize(y_bar, nm.adc_bits, m.full_scale);
  m.values = std::move(y);
  m.values_bar = std::move(y_bar);
  return m;
}

std::vector<double> combine_differential(const Measurement& m) {
  if (!m.values_bar) throw InvalidArgument("combine_differential: measurement has no differential channel");
  if (m.values_bar->size() != m.values.size()) throw DimensionError("combine_differential: channel lengths differ");
  std::vector<double> out(m.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.values[i] - (*m.values_bar)[i];
  return out;
}

std::vector<double> effective_values(const Measurement& m) {
  if (m.differential()) return combine_differential(m);
  if (!m.binary) return m.values;
  std::vector<double> out(m.values.size());
  out[0] = m.values[0];
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = 2.0 * m.values[i] - m.values[0];
  return out;
}

double effective_noise_std(const Measurement& m) {
  if (m.differential()) return std::sqrt(2.0) * m.additive_std;
  if (m.binary) return std::sqrt(5.0) * m.additive_std;
  return m.additive_std;
}

std::vector<std::uint8_t> serialize(const Measurement& m) {
  binio::Writer w;
  w.magic(kMagic);
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(m.values.size()));
  w.u8(static_cast<std::uint8_t>((m.differential() ? 1 : 0) | (m.binary ? 2 : 0)));
  w.f64s(m.values);
  if (m.values_bar) w.f64s(*m.values_bar);
  w.bytes(m.pattern_set_hash.bytes.data(), m.pattern_set_hash.bytes.size());
  w.f64(m.noise.additive_sigma);
  w.u32(static_cast<std::uint32_t>(m.noise.adc_bits));
  w.f64(m.noise.source_fluctuation_sigma);
  w.u64(m.noise.seed);
  w.u64(m.n);
  w.f64(m.full_scale);
  w.f64(m.additive_std);
  return std::move(w.data());
}

Measurement deserialize_measurement(std::span<const std::uint8_t> data) {
  binio::Reader r(data, "spim");
  r.expect_magic(kMagic);
  const auto version = r.u16();
  if (version != kVersion) throw FormatError("spim: unsupported version " + std::to_string(version));
  const std::size_t k = r.u32();
  const auto flags = r.u8();
  if (flags > 3) throw FormatError("spim: invalid flags");
  Measurement m;
  m.binary = (flags & 2) != 0;
  m.values.resize(k);
  r.f64s(m.values);
  if (flags & 1) {
    m.values_bar.emplace(k);
    r.f64s(*m.values_bar);
  }
  const auto hash = r.take(32);
  std::copy(hash.begin(), hash.end(), m.pattern_set_hash.bytes.begin());
  m.noise.additive_sigma = r.f64();
  m.noise.adc_bits = static_cast<int>(r.u32());
  m.noise.source_fluctuation_sigma = r.f64();
  m.noise.seed = r.u64();
  m.n = r.u64();
  m.full_scale = r.f64();
  m.additive_std = r.f64();
  if (m.n == 0 || k == 0 || k > m.n) throw FormatError("spim: inconsistent k/n");
  return m;
}

void save_measurement(const Measurement& m, const std::filesystem::path& path) {
  binio::write_file(path, serialize(m));
}

Measurement load_measurement(const std::filesystem::path& path) {
  return deserialize_measurement(binio::read_file(path));
}

void write_measurement_csv(const Measurement& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (m.differential() ? "index,value,value_bar\n" : "index,value\n");
  char buf[64];
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", m.values[i]);
    out << i << ',' << buf;
    if (m.values_bar) {
      std::snprintf(buf, sizeof buf, "%.17g", (*m.values_bar)[i]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace spi
