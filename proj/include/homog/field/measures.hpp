#pragma once

#include "homog/field/potential.hpp"

namespace homog {

struct ProbeEstimate {
  double value = 0.0;
  int resolution = 0;  // probe nodes per axis at which refinement stopped
};

/// sup U - inf U on a probe grid, refined by doubling until the estimate
/// changes by less than `tol`. A lower estimate of the true oscillation.
ProbeEstimate oscillation(const PotentialExpr& u, int n_probe = 0, double tol = 1e-3);

/// max |U(x) - U(y)| / |x - y|^alpha over probe pairs at torus distance
/// |x - y| <= 1/2, with the same refinement policy as oscillation().
ProbeEstimate holder_seminorm(const PotentialExpr& u, double alpha, int n_probe = 0, double tol = 1e-3);

}  // namespace homog
