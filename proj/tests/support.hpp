#pragma once

#include "homog/field/potential.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace testing {

// SplitMix64: tiny, fully specified generator for property tests.
struct Gen {
  std::uint64_t state;
  explicit Gen(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
};

inline Eigen::VectorXi random_freq(Gen& g, int dim, int max_freq) {
  Eigen::VectorXi k(dim);
  do {
    for (int a = 0; a < dim; ++a) k[a] = g.integer(-max_freq, max_freq);
  } while (k.cwiseAbs().maxCoeff() == 0);
  return k;
}

// Random expression tree exercising every grammar node.
inline homog::PotentialExpr random_expr(Gen& g, int dim, int depth = 3) {
  using E = homog::PotentialExpr;
  int pick = depth <= 0 ? g.integer(0, 2) : g.integer(0, 6);
  switch (pick) {
    case 0: return E::sin(random_freq(g, dim, 3));
    case 1: return E::cos(random_freq(g, dim, 3));
    case 2: return E::constant(dim, g.uniform(-1, 1)) + E::sin(random_freq(g, dim, 2));
    case 3: return E::sin(random_freq(g, dim, 2), g.uniform(-1, 1) * random_expr(g, dim, depth - 1));
    case 4: return random_expr(g, dim, depth - 1) + random_expr(g, dim, depth - 1);
    case 5: return random_expr(g, dim, depth - 1) * random_expr(g, dim, depth - 1);
    default: return E::pow(random_expr(g, dim, depth - 1), g.integer(2, 3));
  }
}

// Smooth random trigonometric polynomial with a few modes.
inline homog::PotentialExpr random_trig_poly(Gen& g, int dim, int terms, int max_freq, double amplitude) {
  using E = homog::PotentialExpr;
  std::vector<E> parts;
  for (int t = 0; t < terms; ++t)
    parts.push_back(g.uniform(-amplitude, amplitude) *
                    E::sin(random_freq(g, dim, max_freq), E::constant(dim, g.uniform(0, 6.283185307179586))));
  return E::sum(parts).normalized();
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
