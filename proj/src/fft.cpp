#include "spi/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "spi/core.hpp"

namespace spi {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

enum class PlanKind { Forward, Inverse, R2C, C2R };

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class Plan {
 public:
  Plan(PlanKind kind, std::size_t width, std::size_t height) : kind_(kind) {
    const std::size_t n = width * height;
    const std::size_t half = height * (width / 2 + 1);
    const int w = static_cast<int>(width);
    const int h = static_cast<int>(height);
    std::lock_guard lock(planner_mutex());
    switch (kind) {
      case PlanKind::Forward:
      case PlanKind::Inverse:
        cin_.reset(fftw_alloc_complex(n));
        cout_.reset(fftw_alloc_complex(n));
        plan_ = fftw_plan_dft_2d(h, w, cin_.get(), cout_.get(),
                                 kind == PlanKind::Forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
        break;
      case PlanKind::R2C:
        rbuf_.reset(fftw_alloc_real(n));
        cout_.reset(fftw_alloc_complex(half));
        plan_ = fftw_plan_dft_r2c_2d(h, w, rbuf_.get(), cout_.get(), FFTW_ESTIMATE);
        break;
      case PlanKind::C2R:
        cin_.reset(fftw_alloc_complex(half));
        rbuf_.reset(fftw_alloc_real(n));
        plan_ = fftw_plan_dft_c2r_2d(h, w, cin_.get(), rbuf_.get(), FFTW_ESTIMATE);
        break;
    }
    if (!plan_) throw Error("fftw planning failed");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  void execute() { fftw_execute(plan_); }
  std::complex<double>* cin() { return reinterpret_cast<std::complex<double>*>(cin_.get()); }
  std::complex<double>* cout() { return reinterpret_cast<std::complex<double>*>(cout_.get()); }
  double* real() { return rbuf_.get(); }

 private:
  PlanKind kind_;
  std::unique_ptr<fftw_complex, FftwFree> cin_;
  std::unique_ptr<fftw_complex, FftwFree> cout_;
  std::unique_ptr<double, FftwFree> rbuf_;
  fftw_plan plan_ = nullptr;
};

Plan& plan_for(PlanKind kind, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw DimensionError("fft: empty grid");
  thread_local std::map<std::tuple<PlanKind, std::size_t, std::size_t>, std::unique_ptr<Plan>> cache;
  auto& slot = cache[{kind, width, height}];
  if (!slot) slot = std::make_unique<Plan>(kind, width, height);
  return *slot;
}

}  // namespace

std::vector<std::complex<double>> dft2(std::span<const std::complex<double>> in, std::size_t width,
                                       std::size_t height, bool inverse) {
  if (in.size() != width * height) throw DimensionError("dft2: size mismatch");
  Plan& p = plan_for(inverse ? PlanKind::Inverse : PlanKind::Forward, width, height);
  std::copy(in.begin(), in.end(), p.cin());
  p.execute();
  return {p.cout(), p.cout() + in.size()};
}

std::vector<std::complex<double>> rdft2(std::span<const double> in, std::size_t width, std::size_t height) {
  if (in.size() != width * height) throw DimensionError("rdft2: size mismatch");
  Plan& p = plan_for(PlanKind::R2C, width, height);
  std::copy(in.begin(), in.end(), p.real());
  p.execute();
  return {p.cout(), p.cout() + height * (width / 2 + 1)};
}

std::vector<double> irdft2(std::span<const std::complex<double>> half, std::size_t width, std::size_t height) {
  if (half.size() != height * (width / 2 + 1)) throw DimensionError("irdft2: size mismatch");
  Plan& p = plan_for(PlanKind::C2R, width, height);
  std::copy(half.begin(), half.end(), p.cin());
  p.execute();
  return {p.real(), p.real() + width * height};
}

}  // namespace spi
