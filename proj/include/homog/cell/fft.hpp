#pragma once

#include "homog/field/grid_field.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace homog {

/// Real-to-complex FFT on a periodic grid (FFTW, half spectrum along the last
/// axis). Plans are built once with FFTW_ESTIMATE so results are
/// deterministic; transforms may be called concurrently.
class RealFft {
 public:
  explicit RealFft(const GridShape& shape);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  const GridShape& shape() const noexcept { return shape_; }
  /// Number of complex coefficients in the half spectrum.
  std::size_t spectrum_size() const noexcept { return spec_size_; }

  /// Unnormalized forward transform.
  void forward(const double* in, std::complex<double>* out) const;
  /// Inverse transform including the 1/N^d factor. `in` is not modified.
  void inverse(const std::complex<double>* in, double* out) const;

  /// Signed integer wave vector of half-spectrum entry `s`.
  const std::array<int, 3>& wave_vector(std::size_t s) const noexcept { return waves_[s]; }
  /// True when any component sits on the Nyquist frequency N/2.
  bool is_nyquist(std::size_t s) const noexcept { return nyquist_[s] != 0; }

 private:
  GridShape shape_;
  std::size_t spec_size_ = 0;
  std::vector<std::array<int, 3>> waves_;
  std::vector<unsigned char> nyquist_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace homog
