#include "spi/tv.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "spi/blas.hpp"

namespace spi {
namespace {

// A point x together with a = A x and r = A^T A x. Every update in the solver
// is affine, so a and r follow along without extra products.
struct Tracked {
  std::vector<double> x, a, r;

  Tracked(std::size_t n, std::size_t m) : x(n), a(m), r(n) {}

  // this = p + s * q
  void set_axpy(const Tracked& p, double s, const Tracked& q) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = p.x[i] + s * q.x[i];
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = p.a[i] + s * q.a[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = p.r[i] + s * q.r[i];
  }
  // this += s * q
  void add(double s, const Tracked& q) { set_axpy(*this, s, q); }
  // this = t * p + (1 - t) * q
  void set_mix(double t, const Tracked& p, const Tracked& q) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = t * p.x[i] + (1.0 - t) * q.x[i];
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = t * p.a[i] + (1.0 - t) * q.a[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = t * p.r[i] + (1.0 - t) * q.r[i];
  }
};

class Problem {
 public:
  Problem(const SvdFactors& f, std::vector<double> b, double eps)
      : f_(f), m_(f.effective_rank), b_(std::move(b)), atb_(f.n()), eps_(eps) {
    f_.vt.adjoint(b_, atb_, m_);
  }

  std::size_t n() const { return f_.n(); }
  std::size_t m() const { return m_; }
  const std::vector<double>& atb() const { return atb_; }
  const std::vector<double>& b() const { return b_; }

  // Minimizer of L/2 ||z - q||^2 over ||A z - b|| <= eps, for A with orthonormal rows.
  void project(const Tracked& q, double lip, Tracked& out) const {
    double c = 1.0, s = 1.0;
    if (eps_ > 0.0) {
      double res = 0.0;
      for (std::size_t i = 0; i < m_; ++i) res += (q.a[i] - b_[i]) * (q.a[i] - b_[i]);
      res = std::sqrt(res);
      const double lambda = std::max(0.0, lip * (res / eps_ - 1.0));
      c = lambda / (lip + lambda);
      s = lambda / lip * (1.0 - c);
    }
    for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] = q.x[i] - c * q.r[i] + s * atb_[i];
    for (std::size_t i = 0; i < m_; ++i) out.a[i] = (1.0 - c) * q.a[i] + s * b_[i];
    for (std::size_t i = 0; i < out.r.size(); ++i) out.r[i] = (1.0 - c) * q.r[i] + s * atb_[i];
  }

 private:
  const SvdFactors& f_;
  std::size_t m_;
  std::vector<double> b_;
  std::vector<double> atb_;
  double eps_;
};

}  // namespace

double total_variation(std::span<const double> x, std::size_t width, std::size_t height) {
  if (x.size() != width * height) throw DimensionError("total_variation: size mismatch");
  double tv = 0.0;
  for (std::size_t yy = 0; yy < height; ++yy)
    for (std::size_t xx = 0; xx < width; ++xx) {
      const double v = x[yy * width + xx];
      const double dx = xx + 1 < width ? x[yy * width + xx + 1] - v : 0.0;
      const double dy = yy + 1 < height ? x[(yy + 1) * width + xx] - v : 0.0;
      tv += std::hypot(dx, dy);
    }
  return tv;
}

double smoothed_tv(std::span<const double> x, std::size_t width, std::size_t height, double mu, std::span<double> grad) {
  if (x.size() != width * height) throw DimensionError("smoothed_tv: size mismatch");
  if (!(mu > 0.0)) throw InvalidArgument("smoothed_tv: mu must be > 0");
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != x.size()) throw DimensionError("smoothed_tv: gradient size mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  double f = 0.0;
  for (std::size_t yy = 0; yy < height; ++yy)
    for (std::size_t xx = 0; xx < width; ++xx) {
      const std::size_t p = yy * width + xx;
      const double dx = xx + 1 < width ? x[p + 1] - x[p] : 0.0;
      const double dy = yy + 1 < height ? x[p + width] - x[p] : 0.0;
      const double norm = std::hypot(dx, dy);
      f += norm < mu ? norm * norm / (2.0 * mu) : norm - mu / 2.0;
      if (!want_grad) continue;
      const double w = std::max(mu, norm);
      const double ux = dx / w;
      const double uy = dy / w;
      grad[p] -= ux + uy;
      if (xx + 1 < width) grad[p + 1] += ux;
      if (yy + 1 < height) grad[p + width] += uy;
    }
  return f;
}

void TvOptions::validate() const {
  if (stages == 0) throw InvalidArgument("tv: stages must be >= 1");
  if (!(mu_start > 0.0) || !(mu_final > 0.0) || mu_final > mu_start)
    throw InvalidArgument("tv: need 0 < mu_final <= mu_start");
  if (!(tol > 0.0)) throw InvalidArgument("tv: tol must be > 0");
  if (max_iterations == 0) throw InvalidArgument("tv: max_iterations must be >= 1");
  if (epsilon && !(*epsilon >= 0.0 && std::isfinite(*epsilon))) throw InvalidArgument("tv: epsilon must be >= 0");
}

double noise_epsilon(const SvdFactors& f, double sigma) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.effective_rank; ++i) s += 1.0 / (f.d[i] * f.d[i]);
  return sigma * std::sqrt(s);
}

namespace {

// Products with the leading rows of V* for several tracked points at once.
// Dense factors go through dgemm with a fixed number of columns so a lane's
// arithmetic does not depend on what else shares the call.
class Products {
 public:
  Products(const SvdFactors& f, std::size_t lanes) : f_(f), m_(f.effective_rank), width_(lanes) {}

  void apply(const std::vector<Tracked*>& ts) {
    if (ts.empty()) return;
    if (width_ <= 1 || !f_.vt.is_dense()) {
      for (auto* t : ts) {
        f_.vt.forward(t->x, t->a, m_);
        f_.vt.adjoint(t->a, t->r, m_);
      }
      return;
    }
    require_working_blas();
    const std::size_t n = f_.n();
    const int w = static_cast<int>(width_);
    const RealMatrix& v = f_.vt.dense();
    xs_.resize(n * width_);
    as_.resize(m_ * width_);
    for (std::size_t g0 = 0; g0 < ts.size(); g0 += width_) {
      const std::size_t cnt = std::min(width_, ts.size() - g0);
      std::fill(xs_.begin(), xs_.end(), 0.0);
      for (std::size_t j = 0; j < cnt; ++j)
        for (std::size_t c = 0; c < n; ++c) xs_[c * width_ + j] = ts[g0 + j]->x[c];
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m_), w, static_cast<int>(n), 1.0,
                  v.data(), static_cast<int>(n), xs_.data(), w, 0.0, as_.data(), w);
      for (std::size_t j = 0; j < cnt; ++j)
        for (std::size_t i = 0; i < m_; ++i) ts[g0 + j]->a[i] = as_[i * width_ + j];
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(n), w, static_cast<int>(m_), 1.0,
                  v.data(), static_cast<int>(n), as_.data(), w, 0.0, xs_.data(), w);
      for (std::size_t j = 0; j < cnt; ++j)
        for (std::size_t c = 0; c < n; ++c) ts[g0 + j]->r[c] = xs_[c * width_ + j];
    }
  }

 private:
  const SvdFactors& f_;
  std::size_t m_;
  std::size_t width_;
  std::vector<double> xs_, as_;
};

struct Lane {
  Problem prob;
  Tracked cur, center, g, gsum, q, yk, zk;
  TvResult res;
  double mu0 = 0.0, mu1 = 0.0, tol0 = 0.0;
  double mu = 0.0, tol = 0.0, lip = 0.0;
  std::size_t stage = 0;
  std::size_t it = 0;
  std::deque<double> recent;
  bool done = false;
  bool finished = false;

  Lane(const SvdFactors& f, std::vector<double> b, double eps)
      : prob(f, std::move(b), eps),
        cur(prob.n(), prob.m()),
        center(prob.n(), prob.m()),
        g(prob.n(), prob.m()),
        gsum(prob.n(), prob.m()),
        q(prob.n(), prob.m()),
        yk(prob.n(), prob.m()),
        zk(prob.n(), prob.m()) {}

  // Call once the tracked products of cur are current.
  void begin_stage(const TvOptions& opts) {
    const std::size_t stages = opts.stages;
    const double frac = stages == 1 ? 1.0 : static_cast<double>(stage) / static_cast<double>(stages - 1);
    mu = mu0 * std::pow(mu1 / mu0, frac);
    tol = tol0 * std::pow(opts.tol / tol0, frac);
    lip = 8.0 / mu;
    center = cur;
    std::fill(gsum.x.begin(), gsum.x.end(), 0.0);
    std::fill(gsum.a.begin(), gsum.a.end(), 0.0);
    std::fill(gsum.r.begin(), gsum.r.end(), 0.0);
    yk = cur;
    recent.clear();
    it = 0;
    done = false;
  }

  // Rest of an iteration once g carries its products. Returns true when the stage ends.
  bool step(double fmu, const TvOptions& opts) {
    q.set_axpy(cur, -1.0 / lip, g);
    prob.project(q, lip, yk);

    const double alpha = 0.5 * static_cast<double>(it + 1);
    gsum.add(alpha, g);
    q.set_axpy(center, -1.0 / lip, gsum);
    prob.project(q, lip, zk);

    const double tau = 2.0 / static_cast<double>(it + 3);
    cur.set_mix(tau, zk, yk);

    if (recent.size() == 10) {
      const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / 10.0;
      if (mean > 0.0 ? std::abs(fmu - mean) / mean < tol : fmu == 0.0) done = true;
      recent.pop_front();
    }
    recent.push_back(fmu);
    ++it;
    return done || it >= opts.max_iterations;
  }
};

std::vector<TvResult> solve(const SvdFactors& f, std::vector<std::vector<double>> ys, std::span<const double> eps,
                            const TvOptions& opts, std::size_t width) {
  opts.validate();
  if (f.effective_rank == 0) throw InvalidArgument("tv: factorization has rank 0");
  const std::size_t w = f.width;
  const std::size_t h = f.height;
  Products products(f, width);

  std::vector<Lane> lanes;
  lanes.reserve(ys.size());
  for (std::size_t l = 0; l < ys.size(); ++l) {
    auto& lane = lanes.emplace_back(f, f.reduced_measurement(ys[l]), eps[l]);
    lane.res.epsilon = eps[l];
    // Start from the minimum-norm solution, which is feasible.
    lane.cur.x = lane.prob.atb();
    lane.cur.a = lane.prob.b();
    lane.cur.r = lane.prob.atb();
    const auto [lo, hi] = std::minmax_element(lane.cur.x.begin(), lane.cur.x.end());
    const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
    lane.mu0 = opts.mu_start * range;
    lane.mu1 = opts.mu_final * range;
    lane.tol0 = std::max(0.1, opts.tol);
    lane.begin_stage(opts);
  }

  std::vector<Tracked*> batch;
  std::vector<Lane*> active, restart;
  std::vector<double> fmu;
  for (;;) {
    active.clear();
    batch.clear();
    for (auto& lane : lanes)
      if (!lane.finished) {
        active.push_back(&lane);
        batch.push_back(&lane.g);
      }
    if (active.empty()) break;
    fmu.resize(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) fmu[i] = smoothed_tv(active[i]->cur.x, w, h, active[i]->mu, active[i]->g.x);
    products.apply(batch);

    restart.clear();
    batch.clear();
    for (std::size_t i = 0; i < active.size(); ++i) {
      Lane& lane = *active[i];
      if (!lane.step(fmu[i], opts)) continue;
      lane.res.iterations += lane.it;
      lane.res.stage_iterations.push_back(lane.it);
      lane.res.stage_tv.push_back(total_variation(lane.yk.x, w, h));
      lane.cur = lane.yk;
      if (++lane.stage == opts.stages) {
        lane.res.converged = lane.done;
        lane.finished = true;
        continue;
      }
      // Refresh the tracked products so drift does not carry across stages.
      restart.push_back(&lane);
      batch.push_back(&lane.cur);
    }
    products.apply(batch);
    for (auto* lane : restart) lane->begin_stage(opts);
  }

  std::vector<TvResult> out;
  out.reserve(lanes.size());
  for (auto& lane : lanes) {
    lane.res.image = Image(w, h, std::move(lane.cur.x));
    out.push_back(std::move(lane.res));
  }
  return out;
}

}  // namespace

TvResult tv_reconstruct(const SvdFactors& f, std::span<const double> y, const TvOptions& opts) {
  const double eps = opts.epsilon.value_or(0.0);
  std::vector<std::vector<double>> ys{{y.begin(), y.end()}};
  return std::move(solve(f, std::move(ys), std::span(&eps, 1), opts, 1).front());
}

std::vector<TvResult> tv_reconstruct_batch(const SvdFactors& f, std::span<const Measurement> ms,
                                           const TvOptions& opts) {
  std::vector<std::vector<double>> ys;
  std::vector<double> eps;
  for (const auto& m : ms) {
    if (!(m.pattern_set_hash == f.source_hash))
      throw HashMismatchError("tv: measurement was taken with a different pattern set");
    ys.push_back(effective_values(m));
    eps.push_back(opts.epsilon.value_or(noise_epsilon(f, effective_noise_std(m))));
  }
  return solve(f, std::move(ys), eps, opts, kTvBatchWidth);
}

TvResult tv_reconstruct(const SvdFactors& f, const Measurement& m, TvOptions opts) {
  if (!(m.pattern_set_hash == f.source_hash))
    throw HashMismatchError("tv: measurement was taken with a different pattern set");
  if (!opts.epsilon) opts.epsilon = noise_epsilon(f, effective_noise_std(m));
  return tv_reconstruct(f, effective_values(m), opts);
}

}  // namespace spi
