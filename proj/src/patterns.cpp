#include "spi/patterns.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_set>

#include "binio.hpp"
#include "spi/fft.hpp"
#include "spi/parallel.hpp"
#include "spi/transforms.hpp"

namespace spi {
namespace {

constexpr std::string_view kMagic = "SPIP";
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kFlagBitPacked = 0x1;
constexpr std::uint8_t kFlagFloat64 = 0x2;

// Parameter draws use a stream distinct from the noise stream of the same row.
constexpr std::uint64_t kParamStreamSalt = 0x70617261ull;

void require_basis_dims(std::size_t width, std::size_t height) {
  if (!is_pow2(width) || !is_pow2(height))
    throw DimensionError("basis pattern sets need power-of-2 dimensions, got " + std::to_string(width) + "x" +
                         std::to_string(height));
}

std::vector<double> deterministic_row(PatternKind kind, std::uint64_t code, std::size_t width, std::size_t height) {
  if (kind == PatternKind::WalshHadamard) return std::move(walsh_row_2d(code, width, height)).release();
  const auto row = noiselet_row_2d(noiselet_code_row(code), width, height);
  const bool imag = noiselet_code_imag(code);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto v = row.values()[i];
    out[i] = std::numbers::sqrt2 * (imag ? v.imag() : v.real());
  }
  return out;
}

void write_header(binio::Writer& w, PatternKind kind, std::size_t width, std::size_t height, std::size_t k,
                  std::uint64_t master_seed, std::uint8_t flags) {
  w.magic(kMagic);
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(static_cast<std::uint32_t>(width));
  w.u32(static_cast<std::uint32_t>(height));
  w.u32(static_cast<std::uint32_t>(k));
  w.u64(master_seed);
  w.u8(flags);
}

void write_meta(binio::Writer& w, PatternKind kind, const std::vector<RowMeta>& meta) {
  for (const auto& m : meta) {
    if (is_morlet(kind)) {
      w.f64(m.params.sigma);
      w.f64(m.params.n_p);
      w.f64(m.params.theta);
    }
    w.u64(m.code);
  }
}

Digest identity_hash(PatternKind kind, std::size_t width, std::size_t height, std::uint64_t master_seed,
                     const std::vector<RowMeta>& meta) {
  binio::Writer w;
  write_header(w, kind, width, height, meta.size(), master_seed, 0);
  write_meta(w, kind, meta);
  return sha256(w.data());
}

RowMeta draw_morlet_meta(const ParamDistribution& dist, std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ kParamStreamSalt));
  return RowMeta{dist.draw(rng), seed};
}

}  // namespace

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::MorletReal: return "morlet-real";
    case PatternKind::MorletBinary: return "morlet-binary";
    case PatternKind::WalshHadamard: return "walsh-hadamard";
    case PatternKind::Noiselet: return "noiselet";
  }
  return "unknown";
}

PatternKind parse_pattern_kind(std::string_view name) {
  if (name == "morlet-real") return PatternKind::MorletReal;
  if (name == "morlet-binary") return PatternKind::MorletBinary;
  if (name == "walsh-hadamard" || name == "wh") return PatternKind::WalshHadamard;
  if (name == "noiselet") return PatternKind::Noiselet;
  throw InvalidArgument("unknown pattern kind '" + std::string(name) + "'");
}

ParamDistribution ParamDistribution::defaults(std::size_t width, std::size_t height) {
  ParamDistribution d;
  d.sigma_lo = 2.0;
  d.sigma_hi = std::max(d.sigma_lo, static_cast<double>(std::min(width, height)) / 8.0);
  d.np_lo = 0.5;
  d.np_hi = 4.0;
  return d;
}

void ParamDistribution::validate() const {
  if (!(sigma_lo > 0.0 && sigma_lo <= sigma_hi && std::isfinite(sigma_hi)))
    throw InvalidArgument("distribution: need 0 < sigma_lo <= sigma_hi");
  if (!(np_lo > 0.0 && np_lo <= np_hi && std::isfinite(np_hi)))
    throw InvalidArgument("distribution: need 0 < np_lo <= np_hi");
  if (np_lo > 2.0 * sigma_hi) throw InvalidArgument("distribution: n_p <= 2*sigma is unsatisfiable");
}

MorletParams ParamDistribution::draw(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_lo = std::log(sigma_lo);
  const double log_hi = std::log(sigma_hi);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double sigma = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    const double n_p = np_lo + (np_hi - np_lo) * unit(rng);
    const double theta = std::numbers::pi * unit(rng);
    if (n_p <= 2.0 * sigma && theta < std::numbers::pi) return MorletParams{sigma, n_p, theta};
  }
  throw InvalidArgument("distribution: rejection sampling of n_p <= 2*sigma did not terminate");
}

std::size_t BitRows::count_ones(std::size_t r) const {
  std::size_t ones = 0;
  for (auto b : row_bytes(r)) ones += static_cast<std::size_t>(std::popcount(b));
  return ones;
}

RealGrid gen_morlet_pattern(const MorletParams& p, std::uint64_t seed, std::size_t width, std::size_t height) {
  const auto wavelet = morlet_wavelet(p, width, height);
  const std::size_t n = width * height;

  // Real part of the wavelet, center moved cyclically to the origin.
  std::vector<double> kernel(n);
  const std::size_t sx = width / 2;
  const std::size_t sy = height / 2;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      kernel[y * width + x] = wavelet.grid((x + sx) % width, (y + sy) % height).real();

  std::vector<double> noise(n);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : noise) v = normal(rng);

  auto spectrum = rdft2(kernel, width, height);
  const auto noise_spectrum = rdft2(noise, width, height);
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= noise_spectrum[i];
  spectrum[0] = 0.0;  // the kernel has zero mean
  auto out = irdft2(spectrum, width, height);

  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& v : out) v *= scale;
  return RealGrid(width, height, std::move(out));
}

BinaryGrid binarize(const RealGrid& pattern) {
  std::vector<std::uint8_t> out(pattern.size());
  std::transform(pattern.values().begin(), pattern.values().end(), out.begin(),
                 [](double v) { return static_cast<std::uint8_t>(v >= 0.0 ? 1 : 0); });
  return BinaryGrid(pattern.width(), pattern.height(), std::move(out));
}

PatternSet::PatternSet(PatternKind kind, std::size_t width, std::size_t height, std::uint64_t master_seed,
                       std::vector<RowMeta> meta, RealMatrix real_rows, BitRows bit_rows)
    : kind_(kind),
      width_(width),
      height_(height),
      master_seed_(master_seed),
      meta_(std::move(meta)),
      real_rows_(std::move(real_rows)),
      bit_rows_(std::move(bit_rows)) {
  if (width_ == 0 || height_ == 0) throw DimensionError("pattern set: empty grid");
  const std::size_t k = meta_.size();
  if (k == 0) throw InvalidArgument("pattern set: k must be >= 1");
  if (k > n()) throw InvalidArgument("pattern set: k exceeds the pixel count");
  switch (kind_) {
    case PatternKind::MorletReal:
      if (real_rows_.rows() != k || real_rows_.cols() != n()) throw DimensionError("pattern set: real rows shape");
      break;
    case PatternKind::MorletBinary:
      if (bit_rows_.rows() != k || bit_rows_.cols() != n()) throw DimensionError("pattern set: bit rows shape");
      if (bit_rows_.count_ones(0) != n()) throw InvalidArgument("pattern set: binary row 0 must be all ones");
      break;
    case PatternKind::WalshHadamard:
    case PatternKind::Noiselet: {
      require_basis_dims(width_, height_);
      std::unordered_set<std::uint64_t> seen;
      for (const auto& m : meta_) {
        if (m.code >= n()) throw InvalidArgument("pattern set: basis row index out of range");
        if (!seen.insert(m.code).second) throw InvalidArgument("pattern set: duplicate basis row index");
      }
      break;
    }
  }
  hash_ = identity_hash(kind_, width_, height_, master_seed_, meta_);
}

std::vector<double> PatternSet::row(std::size_t i) const {
  if (i >= k()) throw InvalidArgument("pattern set: row index out of range");
  switch (kind_) {
    case PatternKind::MorletReal: {
      const auto r = real_rows_.row(i);
      return {r.begin(), r.end()};
    }
    case PatternKind::MorletBinary: {
      std::vector<double> out(n());
      for (std::size_t c = 0; c < n(); ++c) out[c] = bit_rows_.get(i, c) ? 1.0 : 0.0;
      return out;
    }
    default:
      return deterministic_row(kind_, meta_[i].code, width_, height_);
  }
}

std::vector<double> PatternSet::effective_row(std::size_t i) const {
  auto r = row(i);
  if (kind_ == PatternKind::MorletBinary && i != 0)
    for (double& v : r) v = 2.0 * v - 1.0;
  return r;
}

RealMatrix PatternSet::effective_matrix() const {
  if (kind_ == PatternKind::MorletReal) return real_rows_;
  RealMatrix m(k(), n());
  for (std::size_t i = 0; i < k(); ++i) {
    if (kind_ == PatternKind::MorletBinary) {
      auto dst = m.row(i);
      const double lo = i == 0 ? 1.0 : -1.0;
      for (std::size_t c = 0; c < n(); ++c) dst[c] = bit_rows_.get(i, c) ? 1.0 : lo;
    } else {
      const auto r = row(i);
      std::copy(r.begin(), r.end(), m.row(i).begin());
    }
  }
  return m;
}

RealMatrix PatternSet::take_effective_matrix() && {
  if (kind_ == PatternKind::MorletReal) return std::move(real_rows_);
  return effective_matrix();
}

std::size_t PatternSet::payload_bytes() const {
  switch (kind_) {
    case PatternKind::MorletReal: return k() * n() * sizeof(double);
    case PatternKind::MorletBinary: return k() * bit_rows_.stride();
    default: return 0;
  }
}

MorletDictionary gen_morlet_dictionary(std::size_t width, std::size_t height, std::size_t count,
                                       const ParamDistribution& dist, std::uint64_t seed) {
  dist.validate();
  MorletDictionary d{RealMatrix(count, width * height), std::vector<RowMeta>(count)};
  parallel_for(count, [&](std::size_t i) {
    d.meta[i] = draw_morlet_meta(dist, derive_seed(seed, i + 1));
    const auto g = gen_morlet_pattern(d.meta[i].params, d.meta[i].code, width, height);
    std::copy(g.values().begin(), g.values().end(), d.rows.row(i).begin());
  });
  return d;
}

namespace {

PatternSet build_morlet(PatternKind kind, std::size_t width, std::size_t height, std::uint64_t master_seed,
                        std::vector<RowMeta> meta) {
  const std::size_t n = width * height;
  const std::size_t k = meta.size();
  if (k < 2) throw InvalidArgument("morlet pattern sets need k >= 2 (constant row plus patterns)");
  if (kind == PatternKind::MorletReal) {
    RealMatrix rows(k, n);
    std::fill(rows.row(0).begin(), rows.row(0).end(), 1.0 / std::sqrt(static_cast<double>(n)));
    parallel_for(k - 1, [&](std::size_t j) {
      const auto& m = meta[j + 1];
      const auto g = gen_morlet_pattern(m.params, m.code, width, height);
      std::copy(g.values().begin(), g.values().end(), rows.row(j + 1).begin());
    });
    return PatternSet(kind, width, height, master_seed, std::move(meta), std::move(rows), {});
  }
  BitRows bits(k, n);
  for (std::size_t c = 0; c < n; ++c) bits.set(0, c, true);
  parallel_for(k - 1, [&](std::size_t j) {
    const auto& m = meta[j + 1];
    const auto g = gen_morlet_pattern(m.params, m.code, width, height);
    auto dst = bits.row_bytes(j + 1);
    for (std::size_t c = 0; c < n; ++c)
      if (g.values()[c] >= 0.0) dst[c / 8] = static_cast<std::uint8_t>(dst[c / 8] | (1u << (c % 8)));
  });
  return PatternSet(kind, width, height, master_seed, std::move(meta), {}, std::move(bits));
}

}  // namespace

PatternSet gen_pattern_set(PatternKind kind, std::size_t width, std::size_t height, std::size_t k,
                           const ParamDistribution& dist, std::uint64_t master_seed) {
  const std::size_t n = width * height;
  if (width == 0 || height == 0) throw DimensionError("pattern set: empty grid");
  if (k == 0) throw InvalidArgument("pattern set: k must be >= 1");
  if (k > n) throw InvalidArgument("pattern set: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));

  if (is_morlet(kind)) {
    dist.validate();
    if (k < 2) throw InvalidArgument("morlet pattern sets need k >= 2 (constant row plus patterns)");
    std::vector<RowMeta> meta(k);
    for (std::size_t i = 1; i < k; ++i) meta[i] = draw_morlet_meta(dist, derive_seed(master_seed, i));
    return build_morlet(kind, width, height, master_seed, std::move(meta));
  }

  require_basis_dims(width, height);
  // Partial Fisher-Yates over [1, n); row 0 is always selected.
  Rng rng(master_seed);
  std::vector<std::uint64_t> pool(n - 1);
  std::iota(pool.begin(), pool.end(), std::uint64_t{1});
  std::vector<RowMeta> meta(k);
  for (std::size_t i = 1; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i - 1, pool.size() - 1);
    std::swap(pool[i - 1], pool[pick(rng)]);
    meta[i].code = pool[i - 1];
  }
  return PatternSet(kind, width, height, master_seed, std::move(meta), {}, {});
}

PatternSet regenerate(PatternKind kind, std::size_t width, std::size_t height, std::uint64_t master_seed,
                      std::vector<RowMeta> meta) {
  if (is_morlet(kind)) return build_morlet(kind, width, height, master_seed, std::move(meta));
  return PatternSet(kind, width, height, master_seed, std::move(meta), {}, {});
}

std::vector<std::uint8_t> serialize(const PatternSet& ps, PayloadMode mode) {
  std::uint8_t flags = 0;
  if (mode == PayloadMode::Float64) {
    flags = kFlagFloat64;
  } else if (mode == PayloadMode::Natural) {
    if (ps.kind() == PatternKind::MorletBinary) flags = kFlagBitPacked;
    if (ps.kind() == PatternKind::MorletReal) flags = kFlagFloat64;
  }
  binio::Writer w;
  write_header(w, ps.kind(), ps.width(), ps.height(), ps.k(), ps.master_seed(), flags);
  write_meta(w, ps.kind(), ps.meta());
  if (flags == kFlagBitPacked) {
    for (std::size_t i = 0; i < ps.k(); ++i) w.bytes(ps.bit_rows().row_bytes(i).data(), ps.bit_rows().stride());
  } else if (flags == kFlagFloat64) {
    if (ps.kind() == PatternKind::MorletReal) {
      w.f64s(ps.real_rows().values());
    } else {
      for (std::size_t i = 0; i < ps.k(); ++i) w.f64s(ps.row(i));
    }
  }
  return std::move(w.data());
}

PatternSet deserialize(std::span<const std::uint8_t> data) {
  binio::Reader r(data, "spip");
  r.expect_magic(kMagic);
  const auto version = r.u16();
  if (version != kVersion) throw FormatError("spip: unsupported version " + std::to_string(version));
  const auto kind_byte = r.u8();
  if (kind_byte > 3) throw FormatError("spip: unknown kind " + std::to_string(kind_byte));
  const auto kind = static_cast<PatternKind>(kind_byte);
  const std::size_t width = r.u32();
  const std::size_t height = r.u32();
  const std::size_t k = r.u32();
  const auto master_seed = r.u64();
  const auto flags = r.u8();
  if (flags & ~(kFlagBitPacked | kFlagFloat64) || flags == (kFlagBitPacked | kFlagFloat64))
    throw FormatError("spip: invalid flags");
  if (width == 0 || height == 0 || k == 0) throw FormatError("spip: zero dimensions");

  std::vector<RowMeta> meta(k);
  for (auto& m : meta) {
    if (is_morlet(kind)) {
      m.params.sigma = r.f64();
      m.params.n_p = r.f64();
      m.params.theta = r.f64();
    }
    m.code = r.u64();
  }
  const std::size_t n = width * height;

  if (flags == 0 || !is_morlet(kind)) {
    if (flags == kFlagBitPacked) r.take(k * ((n + 7) / 8));
    if (flags == kFlagFloat64) r.take(k * n * sizeof(double));
    return regenerate(kind, width, height, master_seed, std::move(meta));
  }

  if (kind == PatternKind::MorletReal) {
    if (flags != kFlagFloat64) throw FormatError("spip: morlet-real payload must be float64");
    RealMatrix rows(k, n);
    r.f64s(rows.values());
    detail::require_finite<double>(rows.values(), "spip payload");
    return PatternSet(kind, width, height, master_seed, std::move(meta), std::move(rows), {});
  }

  BitRows bits(k, n);
  if (flags == kFlagBitPacked) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto src = r.take(bits.stride());
      std::copy(src.begin(), src.end(), bits.row_bytes(i).begin());
    }
  } else {
    std::vector<double> row(n);
    for (std::size_t i = 0; i < k; ++i) {
      r.f64s(row);
      for (std::size_t c = 0; c < n; ++c) {
        if (row[c] != 0.0 && row[c] != 1.0) throw FormatError("spip: binary payload holds non-binary values");
        bits.set(i, c, row[c] == 1.0);
      }
    }
  }
  return PatternSet(kind, width, height, master_seed, std::move(meta), {}, std::move(bits));
}

void save_pattern_set(const PatternSet& ps, const std::filesystem::path& path, PayloadMode mode) {
  binio::write_file(path, serialize(ps, mode));
}

PatternSet load_pattern_set(const std::filesystem::path& path) { return deserialize(binio::read_file(path)); }

}  // namespace spi

namespace spi {

std::vector<double> basis_forward(PatternKind kind, std::span<const std::uint64_t> codes, std::span<const double> x) {
  std::vector<double> y(codes.size());
  if (kind == PatternKind::WalshHadamard) {
    auto t = fast_wht(x);
    for (std::size_t i = 0; i < codes.size(); ++i) y[i] = t[codes[i]];
    return y;
  }
  if (kind != PatternKind::Noiselet) throw InvalidArgument("basis_forward: not a basis kind");
  std::vector<std::complex<double>> t(x.begin(), x.end());
  fast_noiselet_inplace(t);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto c = t[noiselet_code_row(codes[i])];
    y[i] = std::numbers::sqrt2 * (noiselet_code_imag(codes[i]) ? c.imag() : c.real());
  }
  return y;
}

void basis_adjoint(PatternKind kind, std::span<const std::uint64_t> codes, std::span<const double> y,
                   std::span<double> out) {
  if (codes.size() != y.size()) throw DimensionError("basis_adjoint: length mismatch");
  if (kind == PatternKind::WalshHadamard) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < codes.size(); ++i) out[codes[i]] += y[i];
    fast_wht_inplace(out);
    return;
  }
  if (kind != PatternKind::Noiselet) throw InvalidArgument("basis_adjoint: not a basis kind");
  // sum a_j Re(h_j) + b_j Im(h_j) = Re(H (a - i b)), H symmetric.
  std::vector<std::complex<double>> z(out.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const double v = std::numbers::sqrt2 * y[i];
    auto& slot = z[noiselet_code_row(codes[i])];
    slot += noiselet_code_imag(codes[i]) ? std::complex<double>(0.0, -v) : std::complex<double>(v, 0.0);
  }
  fast_noiselet_inplace(z);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = z[i].real();
}

std::vector<double> project(const PatternSet& ps, std::span<const double> x) {
  if (x.size() != ps.n()) throw DimensionError("project: vector length does not match the pattern set");
  std::vector<double> y(ps.k());
  switch (ps.kind()) {
    case PatternKind::MorletReal:
      for (std::size_t i = 0; i < ps.k(); ++i) {
        const auto r = ps.real_rows().row(i);
        y[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
      }
      return y;
    case PatternKind::MorletBinary:
      for (std::size_t i = 0; i < ps.k(); ++i) {
        const auto bytes = ps.bit_rows().row_bytes(i);
        double acc = 0.0;
        for (std::size_t b = 0; b < bytes.size(); ++b) {
          unsigned bits = bytes[b];
          while (bits) {
            const int bit = std::countr_zero(bits);
            acc += x[b * 8 + static_cast<std::size_t>(bit)];
            bits &= bits - 1;
          }
        }
        y[i] = acc;
      }
      return y;
    default: {
      std::vector<std::uint64_t> codes(ps.k());
      for (std::size_t i = 0; i < ps.k(); ++i) codes[i] = ps.meta()[i].code;
      return basis_forward(ps.kind(), codes, x);
    }
  }
}

}  // namespace spi
