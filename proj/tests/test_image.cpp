#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "spi/image.hpp"

using namespace spi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "spi_test_image";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(LoadImage, Pgm8BitAffineMap) {
  const auto p = scratch("two.pgm");
  write_bytes(p, std::string("P5\n2 2\n255\n") + std::string{'\x00', '\xff', '\x80', '\x40'});
  const auto img = load_image(p);
  ASSERT_EQ(img.width(), 2u);
  ASSERT_EQ(img.height(), 2u);
  EXPECT_DOUBLE_EQ(img.values()[0], 0.0);
  EXPECT_DOUBLE_EQ(img.values()[1], 1.0);
  EXPECT_DOUBLE_EQ(img.values()[2], 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.values()[3], 64.0 / 255.0);
  EXPECT_EQ(img.meta().bit_depth, 8);
  EXPECT_DOUBLE_EQ(img.meta().original_max, 255.0);
}

TEST(LoadImage, Pgm16BitBigEndianWithComment) {
  const auto p = scratch("wide.pgm");
  write_bytes(p, std::string("P5\n# comment\n2 1\n1000\n") + std::string{'\x03', '\xe8', '\x01', '\xf4'});
  const auto img = load_image(p);
  EXPECT_DOUBLE_EQ(img.values()[0], 1.0);
  EXPECT_DOUBLE_EQ(img.values()[1], 0.5);
  EXPECT_EQ(img.meta().bit_depth, 16);
}

TEST(LoadImage, Errors) {
  const auto empty = scratch("empty.pgm");
  write_bytes(empty, "");
  EXPECT_THROW(load_image(empty), TruncatedFileError);

  const auto short_raster = scratch("short.pgm");
  write_bytes(short_raster, "P5\n4 4\n255\n\x01\x02");
  EXPECT_THROW(load_image(short_raster), TruncatedFileError);

  const auto zero = scratch("zero.pgm");
  write_bytes(zero, "P5\n0 4\n255\n");
  EXPECT_THROW(load_image(zero), FormatError);

  const auto ascii = scratch("ascii.pgm");
  write_bytes(ascii, "P2\n1 1\n255\n7\n");
  EXPECT_THROW(load_image(ascii), FormatError);

  EXPECT_THROW(load_image(scratch("missing.pgm")), Error);
}

TEST(SaveImage, ConstantHalfRoundsUp) {
  const auto p = scratch("half.pgm");
  save_image(Image::constant(3, 1, 0.5), p, 8);
  EXPECT_EQ(read_bytes(p), std::string("P5 3 1 255\n") + std::string(3, '\x80'));
}

TEST(SaveImage, ClampsOutOfRange) {
  const auto p = scratch("clamp.pgm");
  save_image(Image(2, 1, {1.7, -0.3}), p, 8);
  const auto back = load_image(p);
  EXPECT_DOUBLE_EQ(back.values()[0], 1.0);
  EXPECT_DOUBLE_EQ(back.values()[1], 0.0);
  EXPECT_THROW(save_image(Image(1, 1, {0.0}), p, 12), InvalidArgument);
}

TEST(SaveImage, RoundTripWithinQuantization) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(17, 9);
  for (auto& v : img.values()) v = u(rng);
  for (int depth : {8, 16}) {
    const auto p = scratch("rt" + std::to_string(depth) + ".pgm");
    save_image(img, p, depth);
    const auto back = load_image(p);
    const double maxval = depth == 8 ? 255.0 : 65535.0;
    for (std::size_t i = 0; i < img.size(); ++i)
      EXPECT_LE(std::abs(back.values()[i] - img.values()[i]), 1.0 / (2.0 * maxval) + 1e-15);
  }
}

TEST(Spif, LosslessRoundTrip) {
  const auto p = scratch("grid.spif");
  Image img(3, 2, {-1.5, 0.0, 1e-300, 2.0, 0.25, 7.0});
  save_spif(img, p);
  const auto raw = read_bytes(p);
  ASSERT_EQ(raw.size(), 16u + 6 * 8);
  EXPECT_EQ(raw.substr(0, 4), "SPIF");
  const auto back = load_image(p);
  EXPECT_EQ(back.vector(), img.vector());
  EXPECT_EQ(back.meta().bit_depth, 64);
}

TEST(Grid, RejectsNonFinite) {
  EXPECT_THROW(RealMatrix(1, 2, {1.0, std::nan("")}), InvalidArgument);
  EXPECT_THROW(Image(1, 1, {std::numeric_limits<double>::infinity()}), InvalidArgument);
  EXPECT_THROW(ComplexGrid(1, 1, {{0.0, std::nan("")}}), InvalidArgument);
  EXPECT_THROW(RealMatrix(2, 2, {1.0}), DimensionError);
}

TEST(Downsample, BoxAverage) {
  Image img(4, 2, {0, 1, 2, 3, 4, 5, 6, 7});
  const auto d = downsample(img, 2);
  ASSERT_EQ(d.width(), 2u);
  ASSERT_EQ(d.height(), 1u);
  EXPECT_DOUBLE_EQ(d.values()[0], 2.5);
  EXPECT_DOUBLE_EQ(d.values()[1], 4.5);
  EXPECT_THROW(downsample(img, 3), DimensionError);
  EXPECT_EQ(fit_to(img, 4, 2).vector(), img.vector());
}
