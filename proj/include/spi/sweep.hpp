#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spi/acquire.hpp"
#include "spi/patterns.hpp"
#include "spi/tv.hpp"

namespace spi {

enum class Method : std::uint8_t { Pinv, Tv };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct NamedImage {
  std::string name;
  Image image;
};

struct SweepOptions {
  std::vector<PatternKind> kinds;
  std::vector<double> crs;
  std::vector<Method> methods;
  NoiseModel noise;
  std::uint64_t seed = 0;
  TvOptions tv;
  std::optional<ParamDistribution> dist;  // defaults to ParamDistribution::defaults(w, h)
  double rank_tol = 1e-10;
  bool differential = true;  // binary kinds measured with both photodiodes
  std::function<void(const std::string&)> log;  // progress and timings, may be empty
};

struct SweepCell {
  PatternKind kind;
  double cr;
  Method method;
  std::string image;
  std::size_t k = 0;
  double psnr_db = 0.0;
  double runtime_s = 0.0;  // reconstruction wall time
  bool converged = true;   // TV only
  std::string error;       // non-empty when the cell failed
};

struct SweepSummary {
  PatternKind kind;
  double cr;
  Method method;
  std::vector<double> psnr_db;  // successful cells, corpus order
  std::size_t failed = 0;
  double mean_db = 0.0;
  double std_db = 0.0;  // population std
  double runtime_s = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // kind, cr, method, image order

  std::vector<SweepSummary> summary() const;
  const SweepSummary* find(const std::vector<SweepSummary>& s, PatternKind kind, double cr, Method m) const;
};

/// k = round(cr * n), at least 1.
std::size_t rows_for(double cr, std::size_t n);

/// Master seed of the pattern set for one (kind, cr) cell group.
std::uint64_t sweep_pattern_seed(std::uint64_t seed, PatternKind kind, double cr);
/// Noise seed for one image within a cell group.
std::uint64_t sweep_noise_seed(std::uint64_t pattern_seed, std::string_view image);

/// Every (image, kind, cr, method): generate, measure, reconstruct, score.
/// Output depends only on the inputs, never on scheduling; a failing cell is
/// recorded with its error and the sweep goes on.
SweepResult run_sweep(const std::vector<NamedImage>& corpus, const SweepOptions& opts);

/// `kind,cr,method,image,psnr_db,runtime_s`. With timings = false the runtime
/// column is written as 0 so that repeated runs are byte-identical.
void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path, bool timings = true);
/// `kind,cr,method,mean_psnr_db,std_psnr_db,images,failed,runtime_s`.
void write_summary_csv(const SweepResult& r, const std::filesystem::path& path, bool timings = true);

}  // namespace spi
