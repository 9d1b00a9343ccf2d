#pragma once

#include <filesystem>

#include "spi/core.hpp"

namespace spi {

/// Loads an 8/16-bit binary PGM (P5) or an SPIF raw-float grid.
///
/// PGM samples are divided by maxval so intensities land in [0, 1]; the bit
/// depth and maxval are kept in Image::meta(). SPIF data is loaded verbatim.
Image load_image(const std::filesystem::path& path);

/// Writes a P5 PGM with the given depth (8 or 16). Values are clamped to
/// [0, 1] and quantized with round-half-up.
void save_image(const Image& img, const std::filesystem::path& path, int depth = 8);

/// Lossless little-endian float64 dump: "SPIF", u32 width, u32 height, u32 reserved, data.
void save_spif(const RealGrid& img, const std::filesystem::path& path);

/// Box-filter downsampling by an integer factor on both axes.
Image downsample(const Image& img, std::size_t factor);

/// Downsamples to (width, height); the source size must be an integer multiple.
Image fit_to(const Image& img, std::size_t width, std::size_t height);

}  // namespace spi
