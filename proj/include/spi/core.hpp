#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument values (negative sizes, parameters outside their domain).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Shapes that do not agree (image vs. pattern set, vector lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// File content that is not one of the supported formats.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File ends before the header or payload is complete.
class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Measurement or cache produced from a different pattern set.
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const std::complex<double>& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}
inline bool is_finite(std::uint8_t) { return true; }

template <typename T>
void require_finite(std::span<const T> values, const char* what) {
  for (const auto& v : values) {
    if (!is_finite(v)) throw InvalidArgument(std::string(what) + ": non-finite entry");
  }
}

}  // namespace detail

/// Row-major 2D grid. Index (x, y) lives at data[y * width + x].
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(std::size_t width, std::size_t height) : width_(width), height_(height), data_(width * height) {
    if (width == 0 || height == 0) throw DimensionError("grid dimensions must be >= 1");
  }

  Grid(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width == 0 || height == 0) throw DimensionError("grid dimensions must be >= 1");
    if (data_.size() != width * height) throw DimensionError("grid data length does not match width*height");
    detail::require_finite<T>(data_, "grid");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  const T& operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  T& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }
  const std::vector<T>& vector() const { return data_; }
  std::vector<T> release() && { return std::move(data_); }

  bool same_shape(const Grid& other) const { return width_ == other.width_ && height_ == other.height_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<std::complex<double>>;
using BinaryGrid = Grid<std::uint8_t>;

/// Where an image came from, kept so that save/load can round-trip.
struct ImageMeta {
  int bit_depth = 0;          // 8 or 16 for PGM, 64 for SPIF, 0 when synthesized
  double original_max = 1.0;  // PGM maxval the data was divided by
};

/// Grayscale image; canonical intensities are in [0, 1] after loading.
class Image : public RealGrid {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height) : RealGrid(width, height) {}
  Image(std::size_t width, std::size_t height, std::vector<double> data, ImageMeta meta = {})
      : RealGrid(width, height, std::move(data)), meta_(meta) {}
  explicit Image(RealGrid grid) : RealGrid(std::move(grid)) {}

  static Image constant(std::size_t width, std::size_t height, double value) {
    return Image(width, height, std::vector<double>(width * height, value));
  }

  const ImageMeta& meta() const { return meta_; }

 private:
  ImageMeta meta_;
};

/// Dense row-major real matrix.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw DimensionError("matrix data length does not match rows*cols");
    detail::require_finite<double>(data_, "matrix");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  RealMatrix transposed() const {
    RealMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  static RealMatrix identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace spi
