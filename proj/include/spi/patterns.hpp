#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "spi/core.hpp"
#include "spi/hash.hpp"
#include "spi/rng.hpp"
#include "spi/wavelets.hpp"

namespace spi {

enum class PatternKind : std::uint8_t { MorletReal = 0, MorletBinary = 1, WalshHadamard = 2, Noiselet = 3 };

std::string_view to_string(PatternKind kind);
/// Accepts "morlet-real", "morlet-binary", "walsh-hadamard" (or "wh") and "noiselet".
PatternKind parse_pattern_kind(std::string_view name);

constexpr bool is_morlet(PatternKind k) { return k == PatternKind::MorletReal || k == PatternKind::MorletBinary; }
constexpr bool is_binary(PatternKind k) { return k == PatternKind::MorletBinary; }

/// Sampling law for Morlet parameters: sigma log-uniform, n_p uniform,
/// theta uniform on [0, pi). Draws violating n_p <= 2*sigma are rejected.
struct ParamDistribution {
  double sigma_lo = 2.0;
  double sigma_hi = 32.0;
  double np_lo = 0.5;
  double np_hi = 4.0;

  /// sigma in [2, min(width, height)/8], n_p in [0.5, 4].
  static ParamDistribution defaults(std::size_t width, std::size_t height);

  void validate() const;
  MorletParams draw(Rng& rng) const;

  friend bool operator==(const ParamDistribution&, const ParamDistribution&) = default;
};

/// Per-row generation record. For Morlet rows `code` is the noise seed; for
/// Walsh-Hadamard it is the basis row index; for noiselets see noiselet_code().
struct RowMeta {
  MorletParams params{0.0, 0.0, 0.0};
  std::uint64_t code = 0;

  friend bool operator==(const RowMeta&, const RowMeta&) = default;
};

// Noiselet rows are complex. Row j and row n-1-j are complex conjugates, so a
// real image is fully described by Re/Im of rows j < n/2. Pattern sets use the
// real-form rows sqrt(2)*Re(h_j) and sqrt(2)*Im(h_j), which are orthonormal;
// their code is 2*j + part with part 0 = real, 1 = imaginary.
constexpr std::uint64_t noiselet_code(std::uint64_t row, bool imaginary) { return 2 * row + (imaginary ? 1 : 0); }
constexpr std::uint64_t noiselet_code_row(std::uint64_t code) { return code / 2; }
constexpr bool noiselet_code_imag(std::uint64_t code) { return (code & 1) != 0; }

/// Bit-packed {0,1} rows, LSB-first within each byte, row-major pixels.
class BitRows {
 public:
  BitRows() = default;
  BitRows(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), stride_((cols + 7) / 8), bits_(rows * stride_) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t stride() const { return stride_; }

  bool get(std::size_t r, std::size_t c) const { return (bits_[r * stride_ + c / 8] >> (c % 8)) & 1u; }
  void set(std::size_t r, std::size_t c, bool v) {
    auto& b = bits_[r * stride_ + c / 8];
    const auto mask = static_cast<std::uint8_t>(1u << (c % 8));
    b = v ? static_cast<std::uint8_t>(b | mask) : static_cast<std::uint8_t>(b & ~mask);
  }
  std::span<const std::uint8_t> row_bytes(std::size_t r) const { return {bits_.data() + r * stride_, stride_}; }
  std::span<std::uint8_t> row_bytes(std::size_t r) { return {bits_.data() + r * stride_, stride_}; }
  std::size_t count_ones(std::size_t r) const;

  friend bool operator==(const BitRows&, const BitRows&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Re(g * psi) where psi is unit-variance white Gaussian noise drawn from
/// `seed` and * is circular convolution done in the frequency domain. The
/// output has zero mean and unit L2 norm.
RealGrid gen_morlet_pattern(const MorletParams& p, std::uint64_t seed, std::size_t width, std::size_t height);

/// Heaviside step: 1 where value >= 0, else 0.
BinaryGrid binarize(const RealGrid& pattern);

/// A measurement matrix: k rows over n = width*height pixels plus the metadata
/// that regenerates them. Immutable after construction.
///
/// Row 0 of Morlet sets is the constant pattern (all ones for the binary kind,
/// 1/sqrt(n) for the real kind) so the image mean is observed. Deterministic
/// sets do not store rows; they are applied through fast transforms.
class PatternSet {
 public:
  PatternSet(PatternKind kind, std::size_t width, std::size_t height, std::uint64_t master_seed,
             std::vector<RowMeta> meta, RealMatrix real_rows, BitRows bit_rows);

  PatternKind kind() const { return kind_; }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t n() const { return width_ * height_; }
  std::size_t k() const { return meta_.size(); }
  double compression_ratio() const { return static_cast<double>(k()) / static_cast<double>(n()); }
  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<RowMeta>& meta() const { return meta_; }
  const Digest& hash() const { return hash_; }

  const RealMatrix& real_rows() const { return real_rows_; }
  const BitRows& bit_rows() const { return bit_rows_; }

  /// Row i as displayed: {0,1} for binary sets, real values otherwise.
  std::vector<double> row(std::size_t i) const;
  /// Row i as it enters the linear model: binary rows map to 2*psi - 1
  /// (the differential signal), except the constant row which stays all ones.
  std::vector<double> effective_row(std::size_t i) const;
  RealMatrix effective_matrix() const;
  /// Same as effective_matrix() but reuses the stored rows when possible.
  RealMatrix take_effective_matrix() &&;

  /// Bytes needed to store the rows themselves (not the metadata).
  std::size_t payload_bytes() const;

 private:
  PatternKind kind_;
  std::size_t width_;
  std::size_t height_;
  std::uint64_t master_seed_;
  std::vector<RowMeta> meta_;
  RealMatrix real_rows_;
  BitRows bit_rows_;
  Digest hash_;
};

/// Builds a pattern set.
///
/// Morlet kinds: row 0 is constant; row i >= 1 uses seed derive_seed(master_seed, i)
/// for the noise and draws its parameters from `dist`. Deterministic kinds pick
/// k distinct rows of the 2D basis uniformly at random, always including row 0.
PatternSet gen_pattern_set(PatternKind kind, std::size_t width, std::size_t height, std::size_t k,
                           const ParamDistribution& dist, std::uint64_t master_seed);

/// Rebuilds a pattern set from its metadata alone.
PatternSet regenerate(PatternKind kind, std::size_t width, std::size_t height, std::uint64_t master_seed,
                      std::vector<RowMeta> meta);

/// `count` Morlet-real rows (no constant row) with parameters from `dist`;
/// row i uses seed derive_seed(seed, i + 1).
struct MorletDictionary {
  RealMatrix rows;
  std::vector<RowMeta> meta;
};
MorletDictionary gen_morlet_dictionary(std::size_t width, std::size_t height, std::size_t count,
                                       const ParamDistribution& dist, std::uint64_t seed);

/// Dot products of every stored row with x (length n); fast transforms for
/// the deterministic kinds.
std::vector<double> project(const PatternSet& ps, std::span<const double> x);

/// y = B x for the basis rows named by `codes` (Walsh-Hadamard or noiselet real-form).
std::vector<double> basis_forward(PatternKind kind, std::span<const std::uint64_t> codes, std::span<const double> x);
/// out = B^T y.
void basis_adjoint(PatternKind kind, std::span<const std::uint64_t> codes, std::span<const double> y,
                   std::span<double> out);

enum class PayloadMode {
  None,     // metadata only; rows are regenerated on load
  Natural,  // bit-packed for binary sets, float64 for morlet-real, none for bases
  Float64,  // every row as little-endian float64
};

/// SPIP file: header ("SPIP", u16 version, u8 kind, u32 width, u32 height,
/// u32 k, u64 master_seed, u8 flags) + per-row metadata + optional payload.
std::vector<std::uint8_t> serialize(const PatternSet& ps, PayloadMode mode);
PatternSet deserialize(std::span<const std::uint8_t> data);
void save_pattern_set(const PatternSet& ps, const std::filesystem::path& path, PayloadMode mode = PayloadMode::Natural);
PatternSet load_pattern_set(const std::filesystem::path& path);

}  // namespace spi
