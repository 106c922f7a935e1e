#include "homog/field/measures.hpp"

#include "homog/field/grid_field.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace homog {
namespace {

// Largest probe grid per axis, so that N^d stays near 2^22 samples.
int probe_cap(int dim) {
  switch (dim) {
    case 1: return 1 << 22;
    case 2: return 2048;
    default: return 128;
  }
}

int initial_probe(const PotentialExpr& u, int n_probe) {
  if (n_probe > 0) return static_cast<int>(next_power_of_two(std::max(4, n_probe)));
  int f = std::max(1, u.max_frequency());
  return static_cast<int>(std::min<long>(probe_cap(u.dimension()), next_power_of_two(std::max(64, 16 * f))));
}

template <class Estimate>
ProbeEstimate refine(const PotentialExpr& u, int n_probe, double tol, Estimate estimate) {
  if (u.dimension() > 3) throw InvalidInput("probe estimates support d <= 3");
  int n = initial_probe(u, n_probe);
  double prev = estimate(n);
  const int cap = probe_cap(u.dimension());
  while (2 * n <= cap) {
    double next = estimate(2 * n);
    n *= 2;
    bool converged = std::abs(next - prev) < tol;
    prev = next;
    if (converged) break;
  }
  return {prev, n};
}

}  // namespace

ProbeEstimate oscillation(const PotentialExpr& u, int n_probe, double tol) {
  return refine(u, n_probe, tol, [&](int n) {
    GridField g = sample_grid(u, n);
    return g.samples.maxCoeff() - g.samples.minCoeff();
  });
}

ProbeEstimate holder_seminorm(const PotentialExpr& u, double alpha, int n_probe, double tol) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("holder_seminorm: alpha must lie in (0, 1]");
  const int d = u.dimension();

  // Probe displacements: primitive lattice directions with entries in [-2, 2]
  // (one of each +/- pair) times step counts 1, 2, 3, 4, 6, 8, ... up to the
  // torus radius 1/2.
  std::vector<std::array<int, 3>> dirs;
  for (int a = -2; a <= 2; ++a)
    for (int b = (d > 1 ? -2 : 0); b <= (d > 1 ? 2 : 0); ++b)
      for (int c = (d > 2 ? -2 : 0); c <= (d > 2 ? 2 : 0); ++c) {
        std::array<int, 3> v{a, b, c};
        if (std::gcd(std::gcd(std::abs(a), std::abs(b)), std::abs(c)) != 1) continue;
        // keep one representative per +/- pair
        auto first = std::find_if(v.begin(), v.end(), [](int e) { return e != 0; });
        if (*first < 0) continue;
        dirs.push_back(v);
      }

  return refine(u, n_probe, tol, [&](int n) {
    GridField g = sample_grid(u, n);
    const GridShape& s = g.shape;
    const double h = s.spacing();
    std::vector<int> steps;
    for (int m = 1; m <= n / 2; m = m < 4 ? m + 1 : m + m / 2) steps.push_back(m);

    struct Job {
      std::array<int, 3> offset;
      double dist;
    };
    std::vector<Job> jobs;
    for (const auto& v : dirs)
      for (int m : steps) {
        double len2 = 0;
        for (int a = 0; a < d; ++a) len2 += double(v[a] * m) * double(v[a] * m);
        double dist = std::sqrt(len2) * h;
        if (dist > 0.5 + 1e-12) continue;
        jobs.push_back({{v[0] * m, v[1] * m, v[2] * m}, dist});
      }

    std::vector<double> best(jobs.size(), 0.0);
    parallel_for(jobs.size(), [&](std::size_t j) {
      std::vector<double> rolled(s.size());
      periodic_roll(s, g.samples.data(), jobs[j].offset, rolled.data());
      double m = 0;
      for (std::size_t i = 0; i < s.size(); ++i) m = std::max(m, std::abs(rolled[i] - g.samples[i]));
      best[j] = m / std::pow(jobs[j].dist, alpha);
    });
    double est = best.empty() ? 0.0 : *std::max_element(best.begin(), best.end());

    // The Lipschitz case is attained in the limit |x - y| -> 0.
    if (alpha == 1.0) {
      std::vector<double> gmax(s.size() / n, 0.0);
      parallel_for(gmax.size(), [&](std::size_t r) {
        double x[3] = {0, 0, 0}, grad[3];
        auto idx = s.unflatten(r * n);
        for (int a = 0; a < d; ++a) x[a] = idx[a] * h;
        for (int j = 0; j < n; ++j) {
          x[d - 1] = j * h;
          u.evaluate(x, grad);
          double nrm = 0;
          for (int a = 0; a < d; ++a) nrm += grad[a] * grad[a];
          gmax[r] = std::max(gmax[r], std::sqrt(nrm));
        }
      });
      est = std::max(est, *std::max_element(gmax.begin(), gmax.end()));
    }
    return est;
  });
}

}  // namespace homog
