#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spi/acquire.hpp"
#include "spi/core.hpp"
#include "spi/hash.hpp"
#include "spi/patterns.hpp"

namespace spi {

/// Operator with orthonormal rows (the V* factor). Either a dense k x n matrix
/// or a subset of a fast orthonormal basis (Walsh-Hadamard or noiselet real-form).
class RowBasis {
 public:
  RowBasis() = default;
  explicit RowBasis(RealMatrix dense);
  RowBasis(PatternKind kind, std::vector<std::uint64_t> codes, std::size_t n);

  std::size_t rows() const;
  std::size_t cols() const { return n_; }
  bool is_dense() const { return !dense_.empty(); }
  const RealMatrix& dense() const { return dense_; }
  RealMatrix& dense() { return dense_; }

  /// y[0..r) = first r rows applied to x.
  void forward(std::span<const double> x, std::span<double> y, std::size_t r) const;
  /// x = (first r rows)^T y[0..r).
  void adjoint(std::span<const double> y, std::span<double> x, std::size_t r) const;
  RealMatrix materialize() const;

 private:
  RealMatrix dense_;
  PatternKind kind_ = PatternKind::WalshHadamard;
  std::vector<std::uint64_t> codes_;
  std::size_t n_ = 0;
};

/// M = U * diag(d) * V*, with V* held as a RowBasis.
struct SvdFactors {
  RealMatrix u;                // k x k; empty means identity
  std::vector<double> d;       // descending
  RowBasis vt;                 // k x n
  double rank_tol = 1e-10;
  std::size_t effective_rank = 0;  // #{d_i > rank_tol * d_0}
  std::size_t width = 0;
  std::size_t height = 0;
  Digest source_hash;
  bool householder_fallback = false;

  std::size_t k() const { return d.size(); }
  std::size_t n() const { return width * height; }
  bool u_is_identity() const { return u.empty(); }

  /// U* y.
  std::vector<double> apply_ut(std::span<const double> y) const;
  /// Y' = D^-1 U* y restricted to the effective rank.
  std::vector<double> reduced_measurement(std::span<const double> y) const;
  /// Dense U (identity materialized if needed).
  RealMatrix u_dense() const;
};

inline constexpr double kDefaultRankTol = 1e-10;

/// SVD of the pattern set's effective matrix (binary rows enter as 2*psi - 1,
/// except the constant row). Orthonormal bases factor exactly as U = I, D = 1,
/// V* = M without forming M.
SvdFactors factorize(const PatternSet& ps, double rank_tol = kDefaultRankTol);
/// As above, but reuses the stored rows as SVD workspace.
SvdFactors factorize(PatternSet&& ps, double rank_tol = kDefaultRankTol);
/// SVD of an explicit k x n matrix describing a width x height grid.
SvdFactors factorize(RealMatrix m, std::size_t width, std::size_t height, double rank_tol = kDefaultRankTol,
                     const Digest& source_hash = {});

/// x = V D^+ U* y, with D^+ inverting only singular values above rank_tol * d_0.
Image pinv_reconstruct(const SvdFactors& f, std::span<const double> y);

/// Precomputed pseudoinverse M+ (n x k). Stored as its transpose, k x n
/// row-major, which is M+ in column-major order.
class PinvMatrix {
 public:
  PinvMatrix() = default;
  PinvMatrix(RealMatrix transposed, std::size_t width, std::size_t height, double rank_tol, const Digest& source_hash);

  std::size_t k() const { return t_.rows(); }
  std::size_t n() const { return t_.cols(); }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double rank_tol() const { return rank_tol_; }
  const Digest& source_hash() const { return source_hash_; }
  /// Column j of M+ (length n).
  std::span<const double> column(std::size_t j) const { return t_.row(j); }
  const RealMatrix& transposed() const { return t_; }
  /// Dense n x k matrix (copies).
  RealMatrix dense() const { return t_.transposed(); }

 private:
  RealMatrix t_;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  double rank_tol_ = kDefaultRankTol;
  Digest source_hash_;
};

PinvMatrix make_pinv(const SvdFactors& f);
/// Builds M+ in the storage of f's dense V*.
PinvMatrix make_pinv(SvdFactors&& f);

/// One matrix-vector product, X = M+ y.
Image pinv_reconstruct(const PinvMatrix& p, std::span<const double> y);

/// SPIV cache file: "SPIV", u64 n, u64 k, f64 rank_tol, 32-byte source hash,
/// u32 width, u32 height, then M+ as column-major float64.
void save_pinv(const PinvMatrix& p, const std::filesystem::path& path);
PinvMatrix load_pinv(const std::filesystem::path& path);

/// Looks up `<dir>/<hash>.spiv`; builds and stores it when absent or stale.
PinvMatrix load_or_build_pinv(const std::filesystem::path& dir, const PatternSet& ps,
                              double rank_tol = kDefaultRankTol);

/// Running M+ y accumulated one sample at a time, as samples arrive.
///
/// Each pixel keeps a compensated (Neumaier) sum, so the result does not depend
/// on update order beyond the last bit. Not thread-safe; use one accumulator per
/// thread and merge().
class PinvStream {
 public:
  explicit PinvStream(const PinvMatrix& f);

  /// acc += column_j(M+) * y_j. Each j may be applied once.
  void update(const PinvMatrix& f, std::size_t j, double y_j);
  /// Adds another accumulator built over disjoint samples of the same matrix.
  void merge(const PinvStream& other);

  std::size_t applied() const { return applied_; }
  bool complete() const { return applied_ == seen_.size(); }
  Image result() const;

 private:
  std::size_t width_;
  std::size_t height_;
  Digest source_hash_;
  std::vector<double> sum_;
  std::vector<double> comp_;
  std::vector<bool> seen_;
  std::size_t applied_ = 0;
};

void pinv_stream_update(PinvStream& acc, const PinvMatrix& f, std::size_t j, double y_j);

}  // namespace spi
