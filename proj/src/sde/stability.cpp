#include "homog/sde/stability.hpp"

#include "homog/util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homog {
namespace {

// Osc of V_p^top over the ball, on a lattice 16 nodes per tail wavelength.
double tail_oscillation(const MultiscaleModel& v, int p, const Eigen::VectorXd& z, double r) {
  const int top = v.scale_count() - 1, d = v.dimension();
  if (p > top) return 0.0;
  double wl = std::numeric_limits<double>::infinity();
  for (int k = p; k <= top; ++k) {
    const int f = v.scale(k).max_frequency();
    if (f > 0) wl = std::min(wl, static_cast<double>(v.period(k)) / f);
  }
  if (!std::isfinite(wl)) return 0.0;
  long per_axis = static_cast<long>(std::ceil(2 * r / (wl / 16))) + 1;
  per_axis = std::min<long>(per_axis, static_cast<long>(std::pow(double(1 << 20), 1.0 / d)));
  const double h = 2 * r / static_cast<double>(per_axis - 1);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, x[3];
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(per_axis);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    double s = 0;
    for (int a = 0; a < d; ++a) {
      x[a] = z[a] - r + h * static_cast<double>(rest % per_axis);
      s += (x[a] - z[a]) * (x[a] - z[a]);
      rest /= per_axis;
    }
    if (s > r * r) continue;
    const double val = v.evaluate(p, top, x, nullptr);
    lo = std::min(lo, val);
    hi = std::max(hi, val);
  }
  return hi - lo;
}

double mu_for(double full, double inf_half, double sup_ball, double osc) {
  const double excess = std::max(std::log(inf_half / full), std::log(full / sup_ball));
  return minimal_mu(excess, osc);
}

}  // namespace

double minimal_mu(double excess, double osc) {
  if (!(osc >= 0)) throw InvalidInput("stability: oscillation must be non-negative");
  auto g = [&](double mu) { return std::log(mu) + mu * osc; };
  if (g(1.0) >= excess) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (g(hi) < excess) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= excess ? hi : lo) = mid;
  }
  return hi;
}

StabilityPoint stability_probe(const MultiscaleModel& v, int n, const Eigen::VectorXd& z, double r,
                               const StabilityConfig& config) {
  const int d = v.dimension();
  if (d > 2) throw InvalidInput("stability probe: d <= 2");
  if (n < 0 || n >= v.scale_count()) throw InvalidInput("stability probe: n outside the model's scales");
  if (z.size() != d) throw InvalidInput("stability probe: z has wrong dimension");
  if (!(r > 0)) throw InvalidInput("stability probe: radius must be positive");

  StabilityPoint pt;
  pt.n = n;
  pt.z = z;
  pt.r = r;
  const MultiscaleModel base = v.truncated(n);

  if (d == 1) {
    auto prof = exit_profile_1d(base, z[0] - r, z[0] + r, config.profile_panels);
    pt.inf_half = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < prof.x.size(); ++i) {
      pt.sup_ball = std::max(pt.sup_ball, prof.f[i]);
      if (std::abs(prof.x[i] - z[0]) <= 0.5 * r) pt.inf_half = std::min(pt.inf_half, prof.f[i]);
    }
  } else {
    auto sol = pde_exit_time(base, Eigen::Vector2d(z[0], z[1]), r, config.pde);
    pt.inf_half = std::numeric_limits<double>::infinity();
    const int side = 2 * sol.m + 1;
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        const double f = sol.at(i, j);
        if (std::isnan(f)) continue;
        pt.sup_ball = std::max(pt.sup_ball, f);
        if ((sol.node(i, j) - sol.center).norm() <= 0.5 * r) pt.inf_half = std::min(pt.inf_half, f);
      }
  }

  if (config.monte_carlo) {
    auto rec = mean_exit_time(v, r, z, z, config.sde);
    if (!rec.valid) throw SolverError("stability probe: Monte Carlo record invalid (" + rec.diagnostics + ")", {});
    pt.full = rec.tau_mean;
    pt.full_stderr = rec.stderr_;
  } else if (d == 1) {
    pt.full = exact_exit_time_1d(v, z[0] - r, z[0] + r, z[0]);
  } else {
    pt.full = pde_exit_time(v, Eigen::Vector2d(z[0], z[1]), r, config.pde).center_value;
  }

  pt.osc_tail = tail_oscillation(v, n + 1, z, r);
  pt.mu_hat = mu_for(pt.full, pt.inf_half, pt.sup_ball, pt.osc_tail);
  pt.mu_hi = pt.mu_hat;
  if (pt.full_stderr > 0) {
    const double lo = std::max(pt.full - 2 * pt.full_stderr, 1e-300), hi = pt.full + 2 * pt.full_stderr;
    pt.mu_hi = std::max(mu_for(lo, pt.inf_half, pt.sup_ball, pt.osc_tail),
                        mu_for(hi, pt.inf_half, pt.sup_ball, pt.osc_tail));
    pt.inconclusive = 2 * pt.full_stderr / pt.full > config.max_relative_error;
  }
  return pt;
}

StabilityBattery stability_battery(const MultiscaleModel& v, const std::vector<StabilityProbeSpec>& probes,
                                   const StabilityConfig& config) {
  StabilityBattery b;
  for (const auto& p : probes) {
    b.points.push_back(stability_probe(v, p.n, p.z, p.r, config));
    if (b.points.back().inconclusive)
      ++b.inconclusive;
    else
      b.mu_max = std::max(b.mu_max, b.points.back().mu_hat);
  }
  return b;
}

}  // namespace homog
