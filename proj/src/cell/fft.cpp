#include "homog/cell/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace homog {
namespace {

// FFTW's planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

RealFft::RealFft(const GridShape& shape) : shape_(shape), plans_(std::make_unique<Plans>()) {
  int dims[3];
  for (int a = 0; a < shape.dim; ++a) dims[a] = shape.n;
  spec_size_ = shape.size() / shape.n * (shape.n / 2 + 1);

  double* r = fftw_alloc_real(shape.size());
  fftw_complex* c = fftw_alloc_complex(spec_size_);
  {
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->fwd = fftw_plan_dft_r2c(shape.dim, dims, r, c, flags);
    plans_->inv = fftw_plan_dft_c2r(shape.dim, dims, c, r, flags);
  }
  fftw_free(r);
  fftw_free(c);

  const int n = shape.n, half = n / 2 + 1;
  waves_.resize(spec_size_);
  nyquist_.resize(spec_size_);
  for (std::size_t s = 0; s < spec_size_; ++s) {
    std::array<int, 3> k{0, 0, 0};
    std::size_t rest = s;
    k[shape.dim - 1] = static_cast<int>(rest % half);
    rest /= half;
    for (int a = shape.dim - 2; a >= 0; --a) {
      int i = static_cast<int>(rest % n);
      rest /= n;
      k[a] = i <= n / 2 ? i : i - n;
    }
    waves_[s] = k;
    bool nyq = false;
    for (int a = 0; a < shape.dim; ++a) nyq = nyq || std::abs(k[a]) == n / 2;
    nyquist_[s] = nyq;
  }
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->inv);
}

void RealFft::forward(const double* in, std::complex<double>* out) const {
  // r2c leaves its input intact; the cast only satisfies the C signature.
  fftw_execute_dft_r2c(plans_->fwd, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
  std::vector<std::complex<double>> scratch(in, in + spec_size_);
  fftw_execute_dft_c2r(plans_->inv, reinterpret_cast<fftw_complex*>(scratch.data()), out);
  const double scale = 1.0 / static_cast<double>(shape_.size());
  for (std::size_t i = 0; i < shape_.size(); ++i) out[i] *= scale;
}

}  // namespace homog
