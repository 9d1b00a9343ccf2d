#include "spi/recon.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binio.hpp"
#include "spi/blas.hpp"
#include "spi/linalg.hpp"

namespace spi {
namespace {

constexpr std::string_view kMagic = "SPIV";
constexpr std::size_t kHeaderBytes = 4 + 8 + 8 + 8 + 32 + 4 + 4;
constexpr std::size_t kBlock = 512;

std::size_t rank_of(const std::vector<double>& d, double tol) {
  if (d.empty() || !(d[0] > 0.0)) return 0;
  const double cut = tol * d[0];
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [cut](double v) { return v > cut; }));
}

// Overwrites the k x n row-major `vt` with U_r D_r^-1 Vt_r, one column block at a time.
void pinv_in_place(const SvdFactors& f, RealMatrix& vt) {
  const std::size_t k = f.k();
  const std::size_t n = vt.cols();
  const std::size_t r = f.effective_rank;
  RealMatrix w(k, r);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < r; ++j) w(i, j) = (f.u_is_identity() ? (i == j ? 1.0 : 0.0) : f.u(i, j)) / f.d[j];
  require_working_blas();
  std::vector<double> tmp(k * kBlock);
  for (std::size_t c0 = 0; c0 < n; c0 += kBlock) {
    const std::size_t b = std::min(kBlock, n - c0);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(k), static_cast<int>(b),
                static_cast<int>(r), 1.0, w.data(), static_cast<int>(std::max<std::size_t>(r, 1)), vt.data() + c0,
                static_cast<int>(n), 0.0, tmp.data(), static_cast<int>(b));
    for (std::size_t i = 0; i < k; ++i) std::copy_n(tmp.data() + i * b, b, vt.data() + i * n + c0);
  }
}

void neumaier_add(double& sum, double& comp, double v) {
  const double t = sum + v;
  if (std::abs(sum) >= std::abs(v))
    comp += (sum - t) + v;
  else
    comp += (v - t) + sum;
  sum = t;
}

}  // namespace

RowBasis::RowBasis(RealMatrix dense) : dense_(std::move(dense)), n_(dense_.cols()) {}

RowBasis::RowBasis(PatternKind kind, std::vector<std::uint64_t> codes, std::size_t n)
    : kind_(kind), codes_(std::move(codes)), n_(n) {
  if (is_morlet(kind)) throw InvalidArgument("RowBasis: not a basis kind");
  for (auto c : codes_)
    if (c >= n) throw InvalidArgument("RowBasis: basis code out of range");
}

std::size_t RowBasis::rows() const { return is_dense() ? dense_.rows() : codes_.size(); }

void RowBasis::forward(std::span<const double> x, std::span<double> y, std::size_t r) const {
  if (x.size() != n_ || y.size() < r || r > rows()) throw DimensionError("RowBasis::forward: size mismatch");
  if (is_dense()) {
    if (r == 0) return;
    cblas_dgemv(CblasRowMajor, CblasNoTrans, static_cast<int>(r), static_cast<int>(n_), 1.0, dense_.data(),
                static_cast<int>(n_), x.data(), 1, 0.0, y.data(), 1);
    return;
  }
  const auto out = basis_forward(kind_, std::span(codes_).first(r), x);
  std::copy(out.begin(), out.end(), y.begin());
}

void RowBasis::adjoint(std::span<const double> y, std::span<double> x, std::size_t r) const {
  if (x.size() != n_ || y.size() < r || r > rows()) throw DimensionError("RowBasis::adjoint: size mismatch");
  if (is_dense()) {
    if (r == 0) {
      std::fill(x.begin(), x.end(), 0.0);
      return;
    }
    cblas_dgemv(CblasRowMajor, CblasTrans, static_cast<int>(r), static_cast<int>(n_), 1.0, dense_.data(),
                static_cast<int>(n_), y.data(), 1, 0.0, x.data(), 1);
    return;
  }
  basis_adjoint(kind_, std::span(codes_).first(r), y.first(r), x);
}

RealMatrix RowBasis::materialize() const {
  if (is_dense()) return dense_;
  RealMatrix m(codes_.size(), n_);
  std::vector<double> e(codes_.size());
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    e[i] = 1.0;
    adjoint(e, m.row(i), codes_.size());
    e[i] = 0.0;
  }
  return m;
}

std::vector<double> SvdFactors::apply_ut(std::span<const double> y) const {
  if (y.size() != k()) throw DimensionError("measurement length " + std::to_string(y.size()) +
                                            " does not match factorization rows " + std::to_string(k()));
  if (u_is_identity()) return {y.begin(), y.end()};
  std::vector<double> out(k());
  gemv(u, y, out, true);
  return out;
}

std::vector<double> SvdFactors::reduced_measurement(std::span<const double> y) const {
  auto t = apply_ut(y);
  t.resize(effective_rank);
  for (std::size_t i = 0; i < effective_rank; ++i) t[i] /= d[i];
  return t;
}

RealMatrix SvdFactors::u_dense() const { return u_is_identity() ? RealMatrix::identity(k()) : u; }

SvdFactors factorize(RealMatrix m, std::size_t width, std::size_t height, double rank_tol, const Digest& source_hash) {
  if (!(rank_tol >= 0.0) || !(rank_tol < 1.0)) throw InvalidArgument("factorize: rank_tol must be in [0, 1)");
  if (m.cols() != width * height) throw DimensionError("factorize: matrix columns do not match width*height");
  if (m.rows() == 0) throw DimensionError("factorize: empty matrix");
  if (m.rows() > m.cols()) throw DimensionError("factorize: more rows than pixels");
  if (frobenius_norm(m) == 0.0) throw InvalidArgument("factorize: degenerate all-zero matrix");
  auto svd = svd_wide(std::move(m));
  SvdFactors f;
  f.u = std::move(svd.u);
  f.d = std::move(svd.s);
  f.vt = RowBasis(std::move(svd.vt));
  f.rank_tol = rank_tol;
  f.effective_rank = rank_of(f.d, rank_tol);
  f.width = width;
  f.height = height;
  f.source_hash = source_hash;
  f.householder_fallback = svd.used_householder;
  return f;
}

namespace {

SvdFactors basis_factors(const PatternSet& ps, double rank_tol) {
  std::vector<std::uint64_t> codes(ps.k());
  for (std::size_t i = 0; i < ps.k(); ++i) codes[i] = ps.meta()[i].code;
  SvdFactors f;
  f.d.assign(ps.k(), 1.0);
  f.vt = RowBasis(ps.kind(), std::move(codes), ps.n());
  f.rank_tol = rank_tol;
  f.effective_rank = ps.k();
  f.width = ps.width();
  f.height = ps.height();
  f.source_hash = ps.hash();
  return f;
}

}  // namespace

SvdFactors factorize(const PatternSet& ps, double rank_tol) {
  if (!is_morlet(ps.kind())) return basis_factors(ps, rank_tol);
  return factorize(ps.effective_matrix(), ps.width(), ps.height(), rank_tol, ps.hash());
}

SvdFactors factorize(PatternSet&& ps, double rank_tol) {
  if (!is_morlet(ps.kind())) return basis_factors(ps, rank_tol);
  const auto w = ps.width();
  const auto h = ps.height();
  const auto hash = ps.hash();
  return factorize(std::move(ps).take_effective_matrix(), w, h, rank_tol, hash);
}

Image pinv_reconstruct(const SvdFactors& f, std::span<const double> y) {
  const auto t = f.reduced_measurement(y);
  std::vector<double> x(f.n());
  f.vt.adjoint(t, x, f.effective_rank);
  return Image(f.width, f.height, std::move(x));
}

PinvMatrix::PinvMatrix(RealMatrix transposed, std::size_t width, std::size_t height, double rank_tol,
                       const Digest& source_hash)
    : t_(std::move(transposed)), width_(width), height_(height), rank_tol_(rank_tol), source_hash_(source_hash) {
  if (t_.cols() != width * height) throw DimensionError("PinvMatrix: columns do not match width*height");
}

PinvMatrix make_pinv(const SvdFactors& f) {
  RealMatrix t = f.vt.materialize();
  pinv_in_place(f, t);
  return PinvMatrix(std::move(t), f.width, f.height, f.rank_tol, f.source_hash);
}

PinvMatrix make_pinv(SvdFactors&& f) {
  RealMatrix t = f.vt.is_dense() ? std::move(f.vt.dense()) : f.vt.materialize();
  pinv_in_place(f, t);
  return PinvMatrix(std::move(t), f.width, f.height, f.rank_tol, f.source_hash);
}

Image pinv_reconstruct(const PinvMatrix& p, std::span<const double> y) {
  if (y.size() != p.k()) throw DimensionError("measurement length " + std::to_string(y.size()) +
                                              " does not match pseudoinverse columns " + std::to_string(p.k()));
  std::vector<double> x(p.n());
  gemv(p.transposed(), y, x, true);
  return Image(p.width(), p.height(), std::move(x));
}

void save_pinv(const PinvMatrix& p, const std::filesystem::path& path) {
  binio::Writer w;
  w.magic(kMagic);
  w.u64(p.n());
  w.u64(p.k());
  w.f64(p.rank_tol());
  w.bytes(p.source_hash().bytes.data(), p.source_hash().bytes.size());
  w.u32(static_cast<std::uint32_t>(p.width()));
  w.u32(static_cast<std::uint32_t>(p.height()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
  static_assert(std::endian::native == std::endian::little);
  const auto payload = p.transposed().values();
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size_bytes()));
  if (!out) throw IoError("failed writing " + path.string());
}

PinvMatrix load_pinv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> header(kHeaderBytes);
  in.read(reinterpret_cast<char*>(header.data()), static_cast<std::streamsize>(header.size()));
  header.resize(static_cast<std::size_t>(in.gcount()));
  binio::Reader r(header, "spiv");
  r.expect_magic(kMagic);
  const auto n = r.u64();
  const auto k = r.u64();
  const double rank_tol = r.f64();
  Digest hash;
  const auto hb = r.take(32);
  std::copy(hb.begin(), hb.end(), hash.bytes.begin());
  const std::size_t width = r.u32();
  const std::size_t height = r.u32();
  if (n == 0 || k == 0 || k > n || width * height != n) throw FormatError("spiv: inconsistent dimensions");
  RealMatrix t(k, n);
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(k * n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != k * n * sizeof(double)) throw TruncatedFileError("spiv: truncated");
  detail::require_finite<double>(t.values(), "spiv");
  return PinvMatrix(std::move(t), width, height, rank_tol, hash);
}

PinvMatrix load_or_build_pinv(const std::filesystem::path& dir, const PatternSet& ps, double rank_tol) {
  const auto path = dir / (ps.hash().hex() + ".spiv");
  if (std::filesystem::exists(path)) {
    try {
      auto p = load_pinv(path);
      if (p.source_hash() == ps.hash() && p.rank_tol() == rank_tol && p.k() == ps.k() && p.n() == ps.n()) return p;
    } catch (const FormatError&) {
    }
  }
  auto p = make_pinv(factorize(ps, rank_tol));
  std::filesystem::create_directories(dir);
  const auto tmp = path.string() + ".tmp";
  save_pinv(p, tmp);
  std::filesystem::rename(tmp, path);
  return p;
}

PinvStream::PinvStream(const PinvMatrix& f)
    : width_(f.width()),
      height_(f.height()),
      source_hash_(f.source_hash()),
      sum_(f.n(), 0.0),
      comp_(f.n(), 0.0),
      seen_(f.k(), false) {}

void PinvStream::update(const PinvMatrix& f, std::size_t j, double y_j) {
  if (!(f.source_hash() == source_hash_) || f.n() != sum_.size() || f.k() != seen_.size())
    throw HashMismatchError("pinv stream: matrix differs from the one the accumulator was built for");
  if (j >= seen_.size()) throw InvalidArgument("pinv stream: sample index out of range");
  if (seen_[j]) throw InvalidArgument("pinv stream: sample " + std::to_string(j) + " already applied");
  if (!std::isfinite(y_j)) throw InvalidArgument("pinv stream: non-finite sample");
  seen_[j] = true;
  ++applied_;
  const auto col = f.column(j);
  for (std::size_t p = 0; p < sum_.size(); ++p) neumaier_add(sum_[p], comp_[p], col[p] * y_j);
}

void PinvStream::merge(const PinvStream& other) {
  if (!(other.source_hash_ == source_hash_) || other.sum_.size() != sum_.size() || other.seen_.size() != seen_.size())
    throw HashMismatchError("pinv stream: cannot merge accumulators of different matrices");
  for (std::size_t j = 0; j < seen_.size(); ++j)
    if (seen_[j] && other.seen_[j]) throw InvalidArgument("pinv stream: sample " + std::to_string(j) + " in both");
  for (std::size_t j = 0; j < seen_.size(); ++j) seen_[j] = seen_[j] || other.seen_[j];
  applied_ += other.applied_;
  for (std::size_t p = 0; p < sum_.size(); ++p) {
    neumaier_add(sum_[p], comp_[p], other.sum_[p]);
    neumaier_add(sum_[p], comp_[p], other.comp_[p]);
  }
}

Image PinvStream::result() const {
  std::vector<double> x(sum_.size());
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = sum_[p] + comp_[p];
  return Image(width_, height_, std::move(x));
}

void pinv_stream_update(PinvStream& acc, const PinvMatrix& f, std::size_t j, double y_j) { acc.update(f, j, y_j); }

}  // namespace spi
