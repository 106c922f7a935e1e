#pragma once

#include <span>
#include <vector>

namespace homog {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x, optionally weighted by
/// 1/sigma^2 when sigma is non-empty.
LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma = {});

struct MeanStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

MeanStats mean_and_stderr(std::span<const double> values);

/// Wilson score interval for a binomial proportion.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

double normal_cdf(double x);

}  // namespace homog
