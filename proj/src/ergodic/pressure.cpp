#include "homog/ergodic/pressure.hpp"

#include "homog/field/grid_field.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"
#include "homog/util/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homog {
namespace {

constexpr std::size_t kChunk = 1 << 14;

// Nodes per axis for Birkhoff frequency rho^{n-1} f_max at `per` points per
// oscillation; 0 when it cannot be represented.
long grid_size(const PotentialExpr& u, long rho, int n, double per) {
  if (n <= 0) return 1;
  const double f = std::max(1, u.max_frequency());
  const double need = per * std::pow(static_cast<double>(rho), n - 1) * f;
  if (need > 1e15) return 0;
  return std::max(4L, next_power_of_two(static_cast<long>(std::ceil(need))));
}

bool fits(long m, int dim, std::size_t budget) {
  return m > 0 && std::pow(static_cast<double>(m), dim) <= static_cast<double>(budget);
}

// Walks every node of an m^d grid through x -> rho x (mod 1), k = 0..n-1,
// calling visit(node, k, sum_{j<=k} U(rho^j x)) after each step.
template <class Visit>
void walk_orbits(const GridField& table, long rho, int n, Visit visit) {
  const int d = table.dimension();
  const auto m = static_cast<std::uint64_t>(table.resolution());
  const std::uint64_t mask = m - 1, r = static_cast<std::uint64_t>(rho) & mask;
  const std::size_t total = table.shape.size();
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  const double* u = table.samples.data();
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(total, lo + kChunk);
    for (std::size_t node = lo; node < hi; ++node) {
      std::uint64_t cur[3] = {0, 0, 0};
      std::size_t rest = node;
      for (int a = d - 1; a >= 0; --a) {
        cur[a] = rest % m;
        rest /= m;
      }
      double s = 0;
      for (int k = 0; k < n; ++k) {
        std::size_t flat = 0;
        for (int a = 0; a < d; ++a) flat = flat * m + cur[a];
        s += u[flat];
        visit(node, k, s);
        for (int a = 0; a < d; ++a) cur[a] = (cur[a] * r) & mask;
      }
    }
  });
}

double log_integral_at(const PotentialExpr& u, long rho, int n, long m) {
  GridField table = sample_grid(u, static_cast<int>(m));
  Eigen::VectorXd sums(static_cast<Eigen::Index>(table.shape.size()));
  walk_orbits(table, rho, n, [&](std::size_t node, int k, double s) {
    if (k == n - 1) sums[static_cast<Eigen::Index>(node)] = s;
  });
  // log-sum-exp with a fixed summation order.
  const double top = sums.maxCoeff();
  const std::size_t total = table.shape.size(), chunks = (total + kChunk - 1) / kChunk;
  std::vector<double> part(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    double acc = 0;
    const std::size_t lo = c * kChunk, hi = std::min(total, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) acc += std::exp(sums[static_cast<Eigen::Index>(i)] - top);
    part[c] = acc;
  });
  double acc = 0;
  for (double p : part) acc += p;
  return top + std::log(acc / static_cast<double>(total));
}

}  // namespace

void QuadratureConfig::validate() const {
  if (q < 8) throw InvalidInput("quadrature: q must be at least 8 points per oscillation");
  if (max_points < 64) throw InvalidInput("quadrature: point budget too small");
}

BirkhoffIntegral birkhoff_log_integral(const PotentialExpr& u, long rho, int n, const QuadratureConfig& config) {
  config.validate();
  if (rho < 2) throw InvalidInput("pressure: rho must be an integer >= 2");
  if (n < 0) throw InvalidInput("pressure: n must be non-negative");
  if (u.dimension() > 3) throw InvalidInput("pressure: d <= 3");
  BirkhoffIntegral b;
  b.n = n;
  if (n == 0) return b;
  const long m = grid_size(u, rho, n, config.q);
  if (!fits(m, u.dimension(), config.max_points))
    throw BudgetError("pressure: n = " + std::to_string(n) + " needs more than " + std::to_string(config.max_points) +
                      " quadrature points");
  b.resolution = m;
  b.log_integral = log_integral_at(u, rho, n, m);
  if (config.check_stability) {
    if (!fits(2 * m, u.dimension(), config.max_points))
      throw BudgetError("pressure: stability check at n = " + std::to_string(n) + " exceeds the point budget");
    b.stability = std::abs(log_integral_at(u, rho, n, 2 * m) - b.log_integral);
  }
  return b;
}

int max_feasible_n(const PotentialExpr& u, long rho, const QuadratureConfig& config, int oversample) {
  const double per = oversample > 0 ? oversample : config.q;
  const std::size_t budget = config.check_stability && oversample == 0 ? config.max_points / 2 : config.max_points;
  int n = 0;
  while (n < 200 && fits(grid_size(u, rho, n + 1, per), u.dimension(), budget)) ++n;
  return n;
}

PressureEstimate pressure_estimate(const PotentialExpr& u, long rho, int first, int last, const QuadratureConfig& config) {
  if (first < 0 || last - first < 2) throw InvalidInput("pressure: the slope needs at least three values of n");
  PressureEstimate p;
  p.rho = rho;
  p.first = first;
  p.last = last;
  p.terms.resize(static_cast<std::size_t>(last - first + 1));
  // Largest n first: a budget failure surfaces before the cheap solves.
  p.terms.back() = birkhoff_log_integral(u, rho, last, config);
  for (int n = first; n < last; ++n) p.terms[n - first] = birkhoff_log_integral(u, rho, n, config);

  std::vector<double> x, y;
  for (const auto& t : p.terms) {
    x.push_back(t.n);
    y.push_back(t.log_integral);
  }
  auto fit = fit_line(x, y);
  p.slope = fit.slope;
  p.slope_stderr = fit.slope_stderr;
  p.residual = fit.residual_rms;

  // Aitken delta-squared on the last three increments (the last increment
  // itself when only two exist).
  const std::size_t k = y.size();
  const double d2 = y[k - 1] - y[k - 2];
  p.aitken = d2;
  if (k >= 4) {
    const double d0 = y[k - 3] - y[k - 4], d1 = y[k - 2] - y[k - 3];
    const double den = d2 - 2 * d1 + d0;
    if (std::abs(den) > 1e-12 * std::max(1.0, std::abs(d2))) p.aitken = d2 - (d2 - d1) * (d2 - d1) / den;
  }
  return p;
}

CocycleEstimate cocycle_criterion(const PotentialExpr& u, long rho, int n_max, const CocycleConfig& config) {
  if (rho < 2) throw InvalidInput("cocycle: rho must be an integer >= 2");
  if (n_max < 3) throw InvalidInput("cocycle: n_max must be at least 3");
  if (config.oversample < 2) throw InvalidInput("cocycle: oversample must be at least 2");
  const long m = grid_size(u, rho, n_max, config.oversample);
  if (!fits(m, u.dimension(), config.max_points))
    throw BudgetError("cocycle: probe grid for n = " + std::to_string(n_max) + " exceeds " +
                      std::to_string(config.max_points) + " points");

  GridField table = sample_grid(u, static_cast<int>(m));
  const double mean = table.samples.mean();
  const std::size_t chunks = (table.shape.size() + kChunk - 1) / kChunk;
  // Per-chunk maxima of |S_k - k mean|, merged in order afterwards.
  std::vector<double> best(chunks * static_cast<std::size_t>(n_max), 0.0);
  walk_orbits(table, rho, n_max, [&](std::size_t node, int k, double s) {
    double& b = best[(node / kChunk) * n_max + k];
    b = std::max(b, std::abs(s - (k + 1) * mean));
  });

  CocycleEstimate c;
  c.rho = rho;
  c.a.assign(n_max, 0.0);
  for (std::size_t ch = 0; ch < chunks; ++ch)
    for (int k = 0; k < n_max; ++k) c.a[k] = std::max(c.a[k], best[ch * n_max + k]);
  for (int k = 0; k < n_max; ++k) c.a[k] /= (k + 1);

  const int len = std::max(3, (n_max + 1) / 2);
  c.first = n_max - len + 1;
  c.last = n_max;
  std::vector<double> x, y;
  for (int n = c.first; n <= c.last; ++n) {
    x.push_back(1.0 / n);
    y.push_back(c.a[n - 1]);
  }
  auto fit = fit_line(x, y);
  c.limsup = std::max(0.0, fit.intercept);
  c.oscillation = table.samples.maxCoeff() - table.samples.minCoeff();
  c.threshold = config.threshold * c.oscillation;
  c.positive = c.limsup > c.threshold;
  return c;
}

ZEstimate z_functional(const PotentialExpr& u, long rho, const ZConfig& config) {
  const int n_max = std::min(config.n_cap, max_feasible_n(u, rho, config.quadrature));
  const int first = std::max(1, n_max / 2);
  if (n_max - first < 2)
    throw BudgetError("z functional: only n <= " + std::to_string(n_max) + " fits the quadrature budget");
  ZEstimate z;
  z.rho = rho;
  z.plus = pressure_estimate(2.0 * u, rho, first, n_max, config.quadrature);
  z.minus = pressure_estimate(-2.0 * u, rho, first, n_max, config.quadrature);
  z.z = -(z.plus.slope + z.minus.slope);
  z.sigma = std::hypot(z.plus.slope_stderr, z.minus.slope_stderr);
  z.aitken = -(z.plus.aitken + z.minus.aitken);
  const double band = 3.0 * z.sigma + config.abs_tolerance;
  z.classification = z.z < -band ? "negative" : (z.z > band ? "positive" : "zero");
  return z;
}

CsvTable pressure_table(const PressureEstimate& p) {
  CsvTable t;
  t.columns = {"n", "ln_I_n", "resolution"};
  for (const auto& b : p.terms) t.add({std::to_string(b.n), format_number(b.log_integral), std::to_string(b.resolution)});
  return t;
}

nlohmann::json pressure_summary(const ZEstimate& z, const CocycleEstimate& c) {
  return {{"rho", z.rho},
          {"P_2U", z.plus.slope},
          {"P_minus2U", z.minus.slope},
          {"Z", z.z},
          {"Z_sigma", z.sigma},
          {"criterion_limsup", c.limsup},
          {"classification", z.classification}};
}

}  // namespace homog
