// spi: single-pixel imaging pipeline front end.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spi/acquire.hpp"
#include "spi/analyze.hpp"
#include "spi/blas.hpp"
#include "spi/config.hpp"
#include "spi/image.hpp"
#include "spi/patterns.hpp"
#include "spi/recon.hpp"
#include "spi/sweep.hpp"
#include "spi/tv.hpp"

namespace fs = std::filesystem;
using namespace spi;

namespace {

using Clock = std::chrono::steady_clock;

struct Globals {
  std::string config;
  bool verbose = false;
  std::optional<std::size_t> threads;
};

class Timer {
 public:
  Timer(bool on, std::string what) : on_(on), what_(std::move(what)), t0_(Clock::now()) {}
  ~Timer() {
    if (on_)
      std::fprintf(stderr, "[time] %s: %.3f s\n", what_.c_str(),
                   std::chrono::duration<double>(Clock::now() - t0_).count());
  }

 private:
  bool on_;
  std::string what_;
  Clock::time_point t0_;
};

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw InvalidArgument("size must look like WIDTHxHEIGHT, got '" + s + "'");
  try {
    std::size_t used = 0;
    const auto w = std::stoull(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const auto h = std::stoull(s.substr(x + 1), &used);
    if (used != s.size() - x - 1) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::logic_error&) {
    throw InvalidArgument("size must look like WIDTHxHEIGHT, got '" + s + "'");
  }
}

PayloadMode parse_payload(const std::string& s) {
  if (s == "none") return PayloadMode::None;
  if (s == "natural") return PayloadMode::Natural;
  if (s == "float64") return PayloadMode::Float64;
  throw InvalidArgument("payload must be none, natural or float64");
}

std::optional<RunConfig> maybe_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return load_run_config(g.config);
}

void apply_threads(const Globals& g, const std::optional<RunConfig>& cfg) {
  std::optional<std::size_t> t = g.threads;
  if (cfg && cfg->threads) t = cfg->threads;
  if (t) setenv("SPI_THREADS", std::to_string(*t).c_str(), 1);
}

// ---- gen ----

struct GenArgs {
  std::string kind;
  std::string size;
  double cr = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string payload = "natural";
  double frame_rate = 22000.0;
  double sigma_lo = 0, sigma_hi = 0, np_lo = 0, np_hi = 0;
};

int cmd_gen(const GenArgs& a, const Globals& g) {
  const auto cfg = maybe_config(g);
  apply_threads(g, cfg);
  const auto kind = parse_pattern_kind(a.kind);
  const auto [w, h] = parse_size(a.size);
  if ((a.cr > 0.0) == (a.k > 0)) throw InvalidArgument("give exactly one of --cr or --rows");
  const std::size_t k = a.k > 0 ? a.k : rows_for(a.cr, w * h);
  if (k > w * h) throw InvalidArgument("more rows than pixels");
  if (!(a.frame_rate > 0.0)) throw InvalidArgument("frame rate must be > 0");

  auto dist = ParamDistribution::defaults(w, h);
  if (a.sigma_lo > 0) dist.sigma_lo = a.sigma_lo;
  if (a.sigma_hi > 0) dist.sigma_hi = a.sigma_hi;
  if (a.np_lo > 0) dist.np_lo = a.np_lo;
  if (a.np_hi > 0) dist.np_hi = a.np_hi;
  if (cfg && cfg->dist) dist = *cfg->dist;

  PatternSet ps = [&] {
    Timer t(g.verbose, "generate");
    return gen_pattern_set(kind, w, h, k, dist, a.seed);
  }();
  const auto mode = parse_payload(a.payload);
  {
    Timer t(g.verbose, "write");
    save_pattern_set(ps, a.out, mode);
  }
  const auto bytes = fs::file_size(a.out);
  std::printf("kind %s\n", std::string(to_string(kind)).c_str());
  std::printf("k %zu\n", ps.k());
  std::printf("n %zu\n", ps.n());
  std::printf("cr %.6f\n", ps.compression_ratio());
  std::printf("storage_bytes %ju\n", static_cast<std::uintmax_t>(bytes));
  std::printf("row_storage_bytes %zu\n", ps.payload_bytes());
  std::printf("display_time_s %.6f\n", static_cast<double>(ps.k()) / a.frame_rate);
  std::printf("hash %s\n", ps.hash().hex().c_str());
  return 0;
}

// ---- measure ----

struct MeasureArgs {
  std::string patterns;
  std::string image;
  std::string out;
  std::string csv;
  std::optional<double> additive_sigma;
  std::optional<int> adc_bits;
  std::optional<double> fluctuation;
  std::optional<std::uint64_t> noise_seed;
  bool single = false;
};

int cmd_measure(const MeasureArgs& a, const Globals& g) {
  const auto cfg = maybe_config(g);
  apply_threads(g, cfg);
  NoiseModel nm;
  if (a.additive_sigma) nm.additive_sigma = *a.additive_sigma;
  if (a.adc_bits) nm.adc_bits = *a.adc_bits;
  if (a.fluctuation) nm.source_fluctuation_sigma = *a.fluctuation;
  if (a.noise_seed) nm.seed = *a.noise_seed;
  if (!nm.noiseless() && !a.noise_seed) throw InvalidArgument("noisy measurement needs an explicit --noise-seed");
  if (cfg && cfg->noise) nm = *cfg->noise;

  const auto ps = [&] {
    Timer t(g.verbose, "load patterns");
    return load_pattern_set(a.patterns);
  }();
  const auto img = load_image(a.image);
  const bool diff = is_binary(ps.kind()) && !a.single;
  const auto m = [&] {
    Timer t(g.verbose, "measure");
    return diff ? measure_differential(img, ps, nm) : measure(img, ps, nm);
  }();
  save_measurement(m, a.out);
  if (!a.csv.empty()) write_measurement_csv(m, a.csv);
  std::printf("k %zu\n", m.k());
  std::printf("differential %s\n", diff ? "yes" : "no");
  std::printf("pattern_hash %s\n", m.pattern_set_hash.hex().c_str());
  return 0;
}

// ---- reconstruct ----

struct ReconArgs {
  std::string patterns;
  std::string measurement;
  std::string method = "pinv";
  std::string out;
  int depth = 8;
  std::string spif;
  std::string reference;
  std::string cache;
  std::optional<double> rank_tol;
  std::optional<double> epsilon;
  std::optional<double> tol;
  std::optional<std::size_t> max_iterations;
};

int cmd_reconstruct(const ReconArgs& a, const Globals& g) {
  const auto cfg = maybe_config(g);
  apply_threads(g, cfg);
  double rank_tol = a.rank_tol.value_or(kDefaultRankTol);
  if (cfg && cfg->rank_tol) rank_tol = *cfg->rank_tol;
  TvOptions tv;
  if (a.epsilon) tv.epsilon = *a.epsilon;
  if (a.tol) tv.tol = *a.tol;
  if (a.max_iterations) tv.max_iterations = *a.max_iterations;
  if (cfg && cfg->tv) tv = *cfg->tv;
  const auto method = parse_method(a.method);

  auto ps = [&] {
    Timer t(g.verbose, "load patterns");
    return load_pattern_set(a.patterns);
  }();
  const auto m = load_measurement(a.measurement);
  if (!(m.pattern_set_hash == ps.hash()))
    throw HashMismatchError("hash mismatch: measurement was taken with pattern set " + m.pattern_set_hash.hex() +
                            ", but " + a.patterns + " has hash " + ps.hash().hex());
  if (m.k() != ps.k() || m.n != ps.n()) throw DimensionError("measurement and pattern set sizes differ");
  const auto y = effective_values(m);

  Image rec;
  if (method == Method::Pinv && !a.cache.empty()) {
    const auto p = [&] {
      Timer t(g.verbose, "pseudoinverse (cache)");
      return load_or_build_pinv(a.cache, ps, rank_tol);
    }();
    Timer t(g.verbose, "reconstruct");
    rec = pinv_reconstruct(p, y);
  } else {
    const auto f = [&] {
      Timer t(g.verbose, "factorize");
      return factorize(std::move(ps), rank_tol);
    }();
    if (g.verbose) std::fprintf(stderr, "[info] effective rank %zu of %zu\n", f.effective_rank, f.k());
    Timer t(g.verbose, "reconstruct");
    if (method == Method::Pinv) {
      rec = pinv_reconstruct(f, y);
    } else {
      auto r = tv_reconstruct(f, m, tv);
      if (g.verbose) {
        for (std::size_t s = 0; s < r.stage_tv.size(); ++s)
          std::fprintf(stderr, "[tv] stage %zu: %zu iterations, TV %.6g\n", s, r.stage_iterations[s], r.stage_tv[s]);
      }
      if (!r.converged) std::fprintf(stderr, "warning: TV solver hit the iteration limit\n");
      rec = std::move(r.image);
    }
  }
  if (!a.out.empty()) save_image(rec, a.out, a.depth);
  if (!a.spif.empty()) save_spif(rec, a.spif);
  if (!a.reference.empty()) {
    const auto ref = load_image(a.reference);
    std::printf("psnr_db %s\n", format_psnr(psnr(rec, ref)).c_str());
  }
  return 0;
}

// ---- sweep ----

struct SweepArgs {
  std::string out;
};

int cmd_sweep(const SweepArgs& a, const Globals& g) {
  if (g.config.empty()) throw InvalidArgument("sweep needs --config");
  const auto cfg = load_run_config(g.config);
  apply_threads(g, cfg);
  const fs::path out = a.out.empty() ? cfg.output_dir : fs::path(a.out);
  const auto corpus = load_corpus(cfg);
  auto opts = sweep_options(cfg);
  if (g.verbose) opts.log = [](const std::string& s) { std::fprintf(stderr, "[sweep] %s\n", s.c_str()); };
  const auto r = run_sweep(corpus, opts);
  fs::create_directories(out);
  write_sweep_csv(r, out / "sweep.csv", cfg.timings);
  write_summary_csv(r, out / "summary.csv", cfg.timings);
  std::size_t failed = 0;
  for (const auto& c : r.cells) failed += c.error.empty() ? 0 : 1;
  for (const auto& s : r.summary())
    std::printf("%-15s cr=%-6g %-4s mean %s dB  std %s dB\n", std::string(to_string(s.kind)).c_str(), s.cr,
                std::string(to_string(s.method)).c_str(), format_psnr(s.mean_db).c_str(),
                format_psnr(s.std_db).c_str());
  if (failed > 0) std::fprintf(stderr, "%zu cell(s) failed; see sweep.csv\n", failed);
  return 0;
}

// ---- analyze-features ----

struct FeatureArgs {
  std::string out;
  std::optional<std::size_t> dict_size;
};

int cmd_features(const FeatureArgs& a, const Globals& g) {
  if (g.config.empty()) throw InvalidArgument("analyze-features needs --config");
  const auto cfg = load_run_config(g.config);
  apply_threads(g, cfg);
  if (!cfg.features) throw InvalidArgument("config has no 'features' section");
  auto fc = *cfg.features;
  const std::size_t dict_size = fc.dict_size.value_or(a.dict_size.value_or(1024));
  std::vector<Image> images;
  for (auto& ni : load_corpus(cfg)) images.push_back(std::move(ni.image));
  const auto dist = cfg.dist.value_or(ParamDistribution::defaults(images.front().width(), images.front().height()));
  const auto h = [&] {
    Timer t(g.verbose, "decompose");
    return decompose_features(images, dict_size, dist, fc.seed, fc.bins);
  }();
  const fs::path out = a.out.empty() ? cfg.output_dir / "features.csv" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_histogram_csv(h, out);
  std::printf("images %zu\n", h.corpus_size);
  std::printf("dict_size %zu\n", h.dict_size);
  std::printf("histogram %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spi::ensure_working_blas(argv);
  CLI::App app{"Single-pixel imaging: pattern generation, measurement simulation and reconstruction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration; its values override flags")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", g.verbose, "Print per-stage timings to stderr");
  app.add_option("--threads", g.threads, "Worker thread cap (same as SPI_THREADS)");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a pattern set (SPIP file)");
  gen->add_option("--kind", ga.kind, "morlet-real, morlet-binary, walsh-hadamard (wh) or noiselet")->required();
  gen->add_option("--size", ga.size, "WIDTHxHEIGHT")->required();
  gen->add_option("--cr", ga.cr, "Compression ratio k/n");
  gen->add_option("--rows", ga.k, "Number of rows k (instead of --cr)");
  gen->add_option("--seed", ga.seed, "Master seed")->required();
  gen->add_option("-o,--out", ga.out, "Output .spip path")->required();
  gen->add_option("--payload", ga.payload, "Row payload: none, natural (default) or float64");
  gen->add_option("--frame-rate", ga.frame_rate, "Modulator frame rate in Hz for the display-time estimate");
  gen->add_option("--sigma-lo", ga.sigma_lo, "Lower sigma bound (pixels)");
  gen->add_option("--sigma-hi", ga.sigma_hi, "Upper sigma bound (pixels)");
  gen->add_option("--np-lo", ga.np_lo, "Lower n_p bound");
  gen->add_option("--np-hi", ga.np_hi, "Upper n_p bound");

  MeasureArgs ma;
  auto* meas = app.add_subcommand("measure", "Simulate single-pixel measurements of an image");
  meas->add_option("--patterns", ma.patterns, "Pattern set (.spip)")->required()->check(CLI::ExistingFile);
  meas->add_option("--image", ma.image, "Scene (PGM or SPIF)")->required()->check(CLI::ExistingFile);
  meas->add_option("-o,--out", ma.out, "Output .spim path")->required();
  meas->add_option("--csv", ma.csv, "Also write the samples as CSV");
  meas->add_option("--noise-sigma", ma.additive_sigma, "Additive detector noise std, fraction of full scale");
  meas->add_option("--adc-bits", ma.adc_bits, "ADC resolution in bits (0 = off)");
  meas->add_option("--fluctuation", ma.fluctuation, "Relative source fluctuation std");
  meas->add_option("--noise-seed", ma.noise_seed, "Noise seed");
  meas->add_flag("--single", ma.single, "Binary sets: one photodiode only (default is differential)");

  ReconArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "Recover an image from a measurement");
  rec->add_option("--patterns", ra.patterns, "Pattern set (.spip)")->required()->check(CLI::ExistingFile);
  rec->add_option("--measurement", ra.measurement, "Measurement (.spim)")->required()->check(CLI::ExistingFile);
  rec->add_option("--method", ra.method, "pinv (default) or tv");
  rec->add_option("-o,--out", ra.out, "Output PGM (clamped to [0, 1])");
  rec->add_option("--depth", ra.depth, "PGM bit depth, 8 or 16");
  rec->add_option("--spif", ra.spif, "Output SPIF with raw values");
  rec->add_option("--reference", ra.reference, "Ground truth image; prints PSNR")->check(CLI::ExistingFile);
  rec->add_option("--cache", ra.cache, "Pseudoinverse cache directory (pinv only)");
  rec->add_option("--rank-tol", ra.rank_tol, "Relative singular value cutoff");
  rec->add_option("--epsilon", ra.epsilon, "TV data-fit radius (default from the measurement noise)");
  rec->add_option("--tol", ra.tol, "TV stopping tolerance");
  rec->add_option("--max-iterations", ra.max_iterations, "TV iteration cap per continuation stage");

  SweepArgs sa;
  auto* sw = app.add_subcommand("sweep", "Run a PSNR vs compression sweep from --config");
  sw->add_option("-o,--out", sa.out, "Output directory (default: output_dir from the config)");

  FeatureArgs fa;
  auto* feat = app.add_subcommand("analyze-features", "Decompose a corpus into Morlet patterns (from --config)");
  feat->add_option("-o,--out", fa.out, "Histogram CSV path");
  feat->add_option("--dict-size", fa.dict_size, "Dictionary size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(ga, g);
    if (*meas) return cmd_measure(ma, g);
    if (*rec) return cmd_reconstruct(ra, g);
    if (*sw) return cmd_sweep(sa, g);
    if (*feat) return cmd_features(fa, g);
  } catch (const HashMismatchError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
