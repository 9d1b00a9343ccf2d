#include "spi/sweep.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "spi/analyze.hpp"
#include "spi/parallel.hpp"
#include "spi/recon.hpp"
#include "spi/rng.hpp"

namespace spi {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void say(const SweepOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::Pinv ? "pinv" : "tv"; }

Method parse_method(std::string_view name) {
  if (name == "pinv") return Method::Pinv;
  if (name == "tv") return Method::Tv;
  throw InvalidArgument("unknown method '" + std::string(name) + "' (expected pinv or tv)");
}

std::size_t rows_for(double cr, std::size_t n) {
  if (!(cr > 0.0 && cr <= 1.0)) throw InvalidArgument("compression ratio must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(cr * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

std::uint64_t sweep_pattern_seed(std::uint64_t seed, PatternKind kind, double cr) {
  const auto cr_code = static_cast<std::uint64_t>(std::llround(cr * 1e6));
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(kind)), cr_code);
}

std::uint64_t sweep_noise_seed(std::uint64_t pattern_seed, std::string_view image) {
  return derive_seed(pattern_seed ^ fnv1a(image), 0);
}

SweepResult run_sweep(const std::vector<NamedImage>& corpus, const SweepOptions& opts) {
  if (corpus.empty()) throw InvalidArgument("sweep: empty corpus");
  if (opts.kinds.empty() || opts.crs.empty() || opts.methods.empty())
    throw InvalidArgument("sweep: kinds, crs and methods must be non-empty");
  opts.noise.validate();
  opts.tv.validate();
  const std::size_t w = corpus.front().image.width();
  const std::size_t h = corpus.front().image.height();
  for (const auto& img : corpus)
    if (img.image.width() != w || img.image.height() != h)
      throw DimensionError("sweep: corpus image '" + img.name + "' differs in size");
  for (double cr : opts.crs) rows_for(cr, w * h);
  const auto dist = opts.dist.value_or(ParamDistribution::defaults(w, h));

  SweepResult result;
  for (const auto kind : opts.kinds) {
    for (const double cr : opts.crs) {
      const std::size_t base = result.cells.size();
      const std::size_t k = rows_for(cr, w * h);
      for (const auto method : opts.methods)
        for (const auto& img : corpus) {
          SweepCell c{kind, cr, method, img.name, k, 0.0, 0.0, true, {}};
          result.cells.push_back(std::move(c));
        }
      auto cell = [&](std::size_t mi, std::size_t ii) -> SweepCell& {
        return result.cells[base + mi * corpus.size() + ii];
      };
      const std::string tag = std::string(to_string(kind)) + " cr=" + fmt("%g", cr);

      try {
        const auto seed = sweep_pattern_seed(opts.seed, kind, cr);
        auto t0 = Clock::now();
        auto ps = gen_pattern_set(kind, w, h, k, dist, seed);
        say(opts, tag + ": generated " + std::to_string(k) + " rows in " + fmt("%.2f", seconds_since(t0)) + " s");

        std::vector<Measurement> ms(corpus.size());
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          NoiseModel nm = opts.noise;
          nm.seed = sweep_noise_seed(derive_seed(opts.noise.seed, seed), corpus[i].name);
          ms[i] = (is_binary(kind) && opts.differential) ? measure_differential(corpus[i].image, ps, nm)
                                                         : measure(corpus[i].image, ps, nm);
        }

        t0 = Clock::now();
        const auto f = factorize(std::move(ps), opts.rank_tol);
        say(opts, tag + ": factorized in " + fmt("%.2f", seconds_since(t0)) + " s, rank " +
                      std::to_string(f.effective_rank));

        for (std::size_t mi = 0; mi < opts.methods.size(); ++mi) {
          if (opts.methods[mi] == Method::Tv) {
            const auto t1 = Clock::now();
            std::vector<TvResult> rs;
            try {
              rs = tv_reconstruct_batch(f, ms, opts.tv);
            } catch (const std::exception& e) {
              for (std::size_t ii = 0; ii < corpus.size(); ++ii) {
                cell(mi, ii).error = e.what();
                cell(mi, ii).psnr_db = std::nan("");
              }
            }
            // Lanes share every product, so the wall time is split evenly.
            const double each = seconds_since(t1) / static_cast<double>(corpus.size());
            for (std::size_t ii = 0; ii < rs.size(); ++ii) {
              auto& c = cell(mi, ii);
              c.converged = rs[ii].converged;
              c.runtime_s = each;
              c.psnr_db = psnr(rs[ii].image, corpus[ii].image);
            }
          } else {
            parallel_for(corpus.size(), [&](std::size_t ii) {
              auto& c = cell(mi, ii);
              try {
                const auto t1 = Clock::now();
                const Image rec = pinv_reconstruct(f, effective_values(ms[ii]));
                c.runtime_s = seconds_since(t1);
                c.psnr_db = psnr(rec, corpus[ii].image);
              } catch (const std::exception& e) {
                c.error = e.what();
                c.psnr_db = std::nan("");
              }
            });
          }
          double total = 0.0;
          for (std::size_t ii = 0; ii < corpus.size(); ++ii) total += cell(mi, ii).runtime_s;
          say(opts, tag + " " + std::string(to_string(opts.methods[mi])) + ": " + fmt("%.2f", total) + " s");
        }
      } catch (const std::exception& e) {
        say(opts, tag + ": failed: " + e.what());
        for (std::size_t i = base; i < result.cells.size(); ++i) {
          result.cells[i].error = e.what();
          result.cells[i].psnr_db = std::nan("");
        }
      }
    }
  }
  return result;
}

std::vector<SweepSummary> SweepResult::summary() const {
  std::vector<SweepSummary> out;
  for (const auto& c : cells) {
    if (out.empty() || out.back().kind != c.kind || out.back().cr != c.cr || out.back().method != c.method)
      out.push_back(SweepSummary{c.kind, c.cr, c.method, {}});
    auto& s = out.back();
    s.runtime_s += c.runtime_s;
    if (c.error.empty())
      s.psnr_db.push_back(c.psnr_db);
    else
      ++s.failed;
  }
  for (auto& s : out) {
    if (s.psnr_db.empty()) {
      s.mean_db = s.std_db = std::nan("");
      continue;
    }
    double sum = 0.0;
    for (double v : s.psnr_db) sum += v;
    s.mean_db = sum / static_cast<double>(s.psnr_db.size());
    if (std::isinf(s.mean_db)) {
      s.std_db = 0.0;
      continue;
    }
    double var = 0.0;
    for (double v : s.psnr_db) var += (v - s.mean_db) * (v - s.mean_db);
    s.std_db = std::sqrt(var / static_cast<double>(s.psnr_db.size()));
  }
  return out;
}

const SweepSummary* SweepResult::find(const std::vector<SweepSummary>& s, PatternKind kind, double cr,
                                      Method m) const {
  for (const auto& row : s)
    if (row.kind == kind && row.method == m && std::abs(row.cr - cr) < 1e-12) return &row;
  return nullptr;
}

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path, bool timings) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "kind,cr,method,image,psnr_db,runtime_s\n";
  for (const auto& c : r.cells) {
    out << to_string(c.kind) << ',' << fmt("%g", c.cr) << ',' << to_string(c.method) << ',' << c.image << ','
        << format_psnr(c.psnr_db) << ',' << fmt("%.6f", timings ? c.runtime_s : 0.0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_summary_csv(const SweepResult& r, const std::filesystem::path& path, bool timings) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "kind,cr,method,mean_psnr_db,std_psnr_db,images,failed,runtime_s\n";
  for (const auto& s : r.summary()) {
    out << to_string(s.kind) << ',' << fmt("%g", s.cr) << ',' << to_string(s.method) << ','
        << format_psnr(s.mean_db) << ',' << format_psnr(s.std_db) << ',' << s.psnr_db.size() << ',' << s.failed
        << ',' << fmt("%.6f", timings ? s.runtime_s : 0.0) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace spi
