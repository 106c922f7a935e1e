#include "homog/analysis/quadrature.hpp"

#include "homog/field/grid_field.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace homog {
namespace {

// Sums of e^{2V} and e^{-2V} over the nodes j / n with odd j
// (step > 1) or all j (step = 1). Fixed chunking keeps the order of
// summation independent of the thread count.
std::pair<double, double> node_sums(const PotentialExpr& v, long n, long first, long step) {
  const long count = (n - first + step - 1) / step;
  const long chunk = 1 << 14;
  const auto chunks = static_cast<std::size_t>((count + chunk - 1) / chunk);
  std::vector<double> plus(chunks), minus(chunks);
  parallel_for(chunks, [&](std::size_t b) {
    double p = 0, m = 0;
    const long lo = static_cast<long>(b) * chunk, hi = std::min(count, lo + chunk);
    for (long i = lo; i < hi; ++i) {
      double x = static_cast<double>(first + i * step) / static_cast<double>(n);
      double e = 2.0 * v.evaluate(&x, nullptr);
      p += std::exp(e);
      m += std::exp(-e);
    }
    plus[b] = p;
    minus[b] = m;
  });
  double p = 0, m = 0;
  for (std::size_t b = 0; b < chunks; ++b) {
    p += plus[b];
    m += minus[b];
  }
  return {p, m};
}

}  // namespace

HarmonicQuadrature harmonic_diffusivity_1d(const PotentialExpr& v, double tol, std::size_t max_points) {
  if (v.dimension() != 1) throw InvalidInput("harmonic quadrature: d = 1 only");
  long n = std::max(64L, next_power_of_two(8L * std::max(1, v.max_frequency())));
  if (static_cast<std::size_t>(n) > max_points)
    throw BudgetError("harmonic quadrature: " + std::to_string(n) + " points exceed the budget of " +
                      std::to_string(max_points));
  auto [p, m] = node_sums(v, n, 0, 1);
  double prev = 1.0 / ((p / n) * (m / n));
  for (;;) {
    if (static_cast<std::size_t>(2 * n) > max_points)
      throw BudgetError("harmonic quadrature did not converge within " + std::to_string(max_points) + " points");
    // Refinement reuses the old nodes: only the new midpoints are evaluated.
    auto [dp, dm] = node_sums(v, 2 * n, 1, 2);
    p += dp;
    m += dm;
    n *= 2;
    const double next = 1.0 / ((p / n) * (m / n));
    if (std::abs(next - prev) <= tol * next) return {next, p / n, m / n, n};
    prev = next;
  }
}

}  // namespace homog
