#include "spi/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spi/image.hpp"
#include "spi/recon.hpp"

namespace spi {
namespace {

using json = nlohmann::json;

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw InvalidArgument("config: " + std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument("config: unknown key '" + key + "' in " + std::string(where));
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::uint64_t required_seed(const json& j, std::string_view where) {
  if (!j.contains("seed")) throw InvalidArgument("config: " + std::string(where) + " needs an explicit seed");
  return j.at("seed").get<std::uint64_t>();
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  try {
    only_keys(j, "config",
              {"seed", "output_dir", "corpus", "downsample", "width", "height", "kinds", "crs", "methods", "noise",
               "distribution", "tv", "rank_tol", "differential", "timings", "threads", "features"});
    RunConfig c;
    c.seed = required_seed(j, "config");
    if (j.contains("output_dir")) c.output_dir = base_dir / j.at("output_dir").get<std::string>();
    if (j.contains("corpus"))
      for (const auto& p : j.at("corpus")) c.corpus.push_back(base_dir / p.get<std::string>());
    maybe(j, "downsample", c.downsample);
    if (c.downsample == 0) throw InvalidArgument("config: downsample must be >= 1");
    if (j.contains("width")) c.width = j.at("width").get<std::size_t>();
    if (j.contains("height")) c.height = j.at("height").get<std::size_t>();
    if (j.contains("kinds"))
      for (const auto& k : j.at("kinds")) c.kinds.push_back(parse_pattern_kind(k.get<std::string>()));
    maybe(j, "crs", c.crs);
    if (j.contains("methods"))
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      only_keys(n, "noise", {"additive_sigma", "adc_bits", "source_fluctuation_sigma", "seed"});
      NoiseModel nm;
      maybe(n, "additive_sigma", nm.additive_sigma);
      maybe(n, "adc_bits", nm.adc_bits);
      maybe(n, "source_fluctuation_sigma", nm.source_fluctuation_sigma);
      nm.seed = required_seed(n, "noise");
      nm.validate();
      c.noise = nm;
    }
    if (j.contains("distribution")) {
      const auto& d = j.at("distribution");
      only_keys(d, "distribution", {"sigma_lo", "sigma_hi", "np_lo", "np_hi"});
      ParamDistribution p;
      maybe(d, "sigma_lo", p.sigma_lo);
      maybe(d, "sigma_hi", p.sigma_hi);
      maybe(d, "np_lo", p.np_lo);
      maybe(d, "np_hi", p.np_hi);
      p.validate();
      c.dist = p;
    }
    if (j.contains("tv")) {
      const auto& t = j.at("tv");
      only_keys(t, "tv", {"stages", "mu_start", "mu_final", "tol", "max_iterations", "epsilon"});
      TvOptions tv;
      maybe(t, "stages", tv.stages);
      maybe(t, "mu_start", tv.mu_start);
      maybe(t, "mu_final", tv.mu_final);
      maybe(t, "tol", tv.tol);
      maybe(t, "max_iterations", tv.max_iterations);
      if (t.contains("epsilon")) tv.epsilon = t.at("epsilon").get<double>();
      tv.validate();
      c.tv = tv;
    }
    if (j.contains("rank_tol")) c.rank_tol = j.at("rank_tol").get<double>();
    maybe(j, "differential", c.differential);
    maybe(j, "timings", c.timings);
    if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
    if (j.contains("features")) {
      const auto& f = j.at("features");
      only_keys(f, "features", {"dict_size", "seed", "sigma_bins", "np_bins", "theta_bins"});
      FeatureConfig fc;
      if (f.contains("dict_size")) fc.dict_size = f.at("dict_size").get<std::size_t>();
      fc.seed = required_seed(f, "features");
      maybe(f, "sigma_bins", fc.bins.sigma_bins);
      maybe(f, "np_bins", fc.bins.np_bins);
      maybe(f, "theta_bins", fc.bins.theta_bins);
      c.features = fc;
    }
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::vector<NamedImage> load_corpus(const RunConfig& cfg) {
  std::vector<std::filesystem::path> files;
  for (const auto& p : cfg.corpus) {
    if (std::filesystem::is_directory(p)) {
      for (const auto& e : std::filesystem::directory_iterator(p)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".spif")) files.push_back(e.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedImage> out;
  for (const auto& f : files) {
    auto img = load_image(f);
    if (cfg.downsample > 1) img = downsample(img, cfg.downsample);
    if (cfg.width || cfg.height) img = fit_to(img, cfg.width.value_or(img.width()), cfg.height.value_or(img.height()));
    out.push_back({f.stem().string(), std::move(img)});
  }
  if (out.empty()) throw InvalidArgument("config: corpus is empty");
  return out;
}

SweepOptions sweep_options(const RunConfig& cfg) {
  SweepOptions o;
  o.kinds = cfg.kinds;
  o.crs = cfg.crs;
  o.methods = cfg.methods;
  o.noise = cfg.noise.value_or(NoiseModel{});
  o.seed = cfg.seed;
  o.tv = cfg.tv.value_or(TvOptions{});
  o.dist = cfg.dist;
  o.rank_tol = cfg.rank_tol.value_or(kDefaultRankTol);
  o.differential = cfg.differential;
  return o;
}

}  // namespace spi
