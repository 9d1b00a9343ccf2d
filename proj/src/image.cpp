#include "spi/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "binio.hpp"

namespace spi {
namespace {

constexpr std::string_view kSpifMagic = "SPIF";

class PgmHeaderParser {
 public:
  explicit PgmHeaderParser(std::span<const std::uint8_t> data) : data_(data) {}

  unsigned long next_number() {
    skip_space_and_comments();
    if (pos_ >= data_.size()) throw TruncatedFileError("pgm: truncated header");
    if (!std::isdigit(data_[pos_])) throw FormatError("pgm: malformed header");
    unsigned long v = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      v = v * 10 + (data_[pos_] - '0');
      if (v > 0xFFFFFFFFul) throw FormatError("pgm: header value out of range");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= data_.size()) throw TruncatedFileError("pgm: truncated header");
    if (!std::isspace(data_[pos_])) throw FormatError("pgm: malformed header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (std::isspace(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 2;
};

Image load_pgm(std::span<const std::uint8_t> data) {
  PgmHeaderParser p(data);
  const auto width = p.next_number();
  const auto height = p.next_number();
  const auto maxval = p.next_number();
  if (width == 0 || height == 0) throw FormatError("pgm: zero dimensions");
  if (maxval == 0 || maxval > 65535) throw FormatError("pgm: maxval must be in [1, 65535]");
  const std::size_t offset = p.raster_offset();
  const std::size_t bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t n = width * height;
  if (data.size() < offset + n * bytes_per_sample) throw TruncatedFileError("pgm: truncated raster");

  std::vector<double> px(n);
  const double scale = 1.0 / static_cast<double>(maxval);
  const std::uint8_t* raster = data.data() + offset;
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = bytes_per_sample == 1 ? raster[i] : (unsigned{raster[2 * i]} << 8) | raster[2 * i + 1];
    if (v > maxval) throw FormatError("pgm: sample exceeds maxval");
    px[i] = v * scale;
  }
  ImageMeta meta{bytes_per_sample == 1 ? 8 : 16, static_cast<double>(maxval)};
  return Image(width, height, std::move(px), meta);
}

Image load_spif(std::span<const std::uint8_t> data) {
  binio::Reader r(data, "spif");
  r.expect_magic(kSpifMagic);
  const auto width = r.u32();
  const auto height = r.u32();
  r.u32();  // reserved
  if (width == 0 || height == 0) throw FormatError("spif: zero dimensions");
  std::vector<double> px(std::size_t{width} * height);
  r.f64s(px);
  return Image(width, height, std::move(px), ImageMeta{64, 1.0});
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const auto data = binio::read_file(path);
  if (data.size() < 2) throw TruncatedFileError(path.string() + ": truncated file");
  if (data[0] == 'P' && data[1] == '5') return load_pgm(data);
  if (data.size() >= 4 && std::equal(kSpifMagic.begin(), kSpifMagic.end(), data.begin())) return load_spif(data);
  if (data.size() < 4 && data[0] == 'S') throw TruncatedFileError(path.string() + ": truncated file");
  throw FormatError(path.string() + ": unsupported image format (expected P5 PGM or SPIF)");
}

void save_image(const Image& img, const std::filesystem::path& path, int depth) {
  if (depth != 8 && depth != 16) throw InvalidArgument("save_image: depth must be 8 or 16");
  const unsigned maxval = depth == 8 ? 255u : 65535u;
  binio::Writer w;
  w.magic("P5 " + std::to_string(img.width()) + " " + std::to_string(img.height()) + " " +
          std::to_string(maxval) + "\n");
  for (double v : img.values()) {
    const double c = std::clamp(v, 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::floor(c * maxval + 0.5));
    if (depth == 8) {
      w.u8(static_cast<std::uint8_t>(q));
    } else {
      w.u8(static_cast<std::uint8_t>(q >> 8));  // PGM samples are big-endian
      w.u8(static_cast<std::uint8_t>(q & 0xFF));
    }
  }
  binio::write_file(path, w.data());
}

void save_spif(const RealGrid& img, const std::filesystem::path& path) {
  binio::Writer w;
  w.magic(kSpifMagic);
  w.u32(static_cast<std::uint32_t>(img.width()));
  w.u32(static_cast<std::uint32_t>(img.height()));
  w.u32(0);
  w.f64s(img.values());
  binio::write_file(path, w.data());
}

Image downsample(const Image& img, std::size_t factor) {
  if (factor == 0) throw InvalidArgument("downsample: factor must be >= 1");
  if (factor == 1) return img;
  if (img.width() % factor != 0 || img.height() % factor != 0)
    throw DimensionError("downsample: image size is not a multiple of the factor");
  const std::size_t w = img.width() / factor;
  const std::size_t h = img.height() / factor;
  std::vector<double> out(w * h, 0.0);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) out[(y / factor) * w + x / factor] += img(x, y);
  for (double& v : out) v *= inv;
  return Image(w, h, std::move(out), img.meta());
}

Image fit_to(const Image& img, std::size_t width, std::size_t height) {
  if (img.width() == width && img.height() == height) return img;
  if (width == 0 || height == 0 || img.width() % width != 0 || img.height() % height != 0 ||
      img.width() / width != img.height() / height)
    throw DimensionError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                         " cannot be box-downsampled to " + std::to_string(width) + "x" + std::to_string(height));
  return downsample(img, img.width() / width);
}

}  // namespace spi
