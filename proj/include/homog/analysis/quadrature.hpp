#pragma once

#include "homog/field/potential.hpp"

#include <cstddef>

namespace homog {

/// Means of e^{2V} and e^{-2V} over the unit torus (d = 1) by the periodic
/// trapezoid rule, doubled until the harmonic-mean diffusivity changes by
/// less than tol relative. Points are streamed, never stored.
struct HarmonicQuadrature {
  double value = 1.0;       // (mean e^{2V} mean e^{-2V})^{-1}
  double mean_plus = 1.0;   // mean e^{2V}
  double mean_minus = 1.0;  // mean e^{-2V}
  long points = 0;
};

HarmonicQuadrature harmonic_diffusivity_1d(const PotentialExpr& v, double tol = 1e-10,
                                           std::size_t max_points = std::size_t{1} << 24);

}  // namespace homog
