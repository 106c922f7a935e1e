#include "homog/util/stats.hpp"

#include "homog/util/errors.hpp"

#include <cmath>

namespace homog {

LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
  if (x.size() != y.size()) throw InvalidInput("fit_line: size mismatch");
  if (!sigma.empty() && sigma.size() != x.size()) throw InvalidInput("fit_line: sigma size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("fit_line: need at least two points");

  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    sxx += w * (x[i] - mx) * (x[i] - mx);
    sxy += w * (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw InvalidInput("fit_line: degenerate abscissae");

  LinearFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - fit.intercept - fit.slope * x[i];
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  if (!sigma.empty()) {
    fit.slope_stderr = std::sqrt(1.0 / sxx);
  } else if (n > 2) {
    fit.slope_stderr = std::sqrt(ss / (n - 2) / sxx);
  }
  return fit;
}

MeanStats mean_and_stderr(std::span<const double> values) {
  MeanStats s;
  s.count = values.size();
  if (values.empty()) return s;
  // Two-pass for accuracy; order is fixed so the result is deterministic.
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stderr_ = std::sqrt(ss / (s.count - 1) / s.count);
  }
  return s;
}

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = hits / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace homog
