#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "spi/analyze.hpp"
#include "spi/sweep.hpp"

namespace spi {

struct FeatureConfig {
  std::optional<std::size_t> dict_size;  // 1024 when neither config nor flag gives one
  std::uint64_t seed = 0;
  HistogramSpec bins;
};

/// A reproducible run, read from a JSON document (comments allowed). Sections
/// that are present override the matching command-line flags.
///
/// Unknown keys are errors at every level. `seed` is mandatory, and so is
/// `noise.seed` / `features.seed` whenever those sections are present.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::vector<std::filesystem::path> corpus;  // files, or directories scanned for .pgm/.spif
  std::size_t downsample = 1;                 // box-filter factor applied on load
  std::optional<std::size_t> width;           // box-downsampled to this size
  std::optional<std::size_t> height;
  std::vector<PatternKind> kinds;
  std::vector<double> crs;
  std::vector<Method> methods;
  std::optional<NoiseModel> noise;
  std::optional<ParamDistribution> dist;
  std::optional<TvOptions> tv;
  std::optional<double> rank_tol;
  bool differential = true;
  bool timings = true;
  std::optional<std::size_t> threads;
  std::optional<FeatureConfig> features;
};

/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Loads every corpus image, named by file stem, in sorted path order.
std::vector<NamedImage> load_corpus(const RunConfig& cfg);

/// Sweep options with the config's seeds and settings.
SweepOptions sweep_options(const RunConfig& cfg);

}  // namespace spi
