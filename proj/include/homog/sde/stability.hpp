#pragma once

#include "homog/sde/exit_time.hpp"
#include "homog/sde/oracles.hpp"

#include <vector>

namespace homog {

/// Evidence for the stability sandwich
///   mu^{-1} e^{-mu O} inf_{B(z,r/2)} E^{V_0^n}_x tau <= E^V_z tau <= mu e^{mu O} sup_{B(z,r)} E^{V_0^n}_x tau
/// with tau the exit time of B(z, r) and O = Osc_{B(z,r)} of the tail
/// V_{n+1}^{top}. V is the model truncated at its last scale.
struct StabilityConfig {
  bool monte_carlo = true;       // E^V by simulation; false uses the oracle
  SdeConfig sde;
  PdeExitConfig pde;             // d = 2 oracle
  long profile_panels = 4096;    // d = 1 oracle grid
  double max_relative_error = 0.05;  // 2 stderr / mean above this: inconclusive
};

struct StabilityPoint {
  int n = 0;
  Eigen::VectorXd z;
  double r = 0.0;
  double full = 0.0;          // E^V_z tau
  double full_stderr = 0.0;   // 0 for the oracle
  double inf_half = 0.0;      // inf over B(z, r/2) of E^{V_0^n}_x tau
  double sup_ball = 0.0;      // sup over B(z, r)
  double osc_tail = 0.0;
  double mu_hat = 1.0;        // smallest mu >= 1 satisfying both sides
  double mu_hi = 1.0;         // the same at E^V shifted by 2 stderr
  bool inconclusive = false;
};

/// Smallest mu >= 1 with ln mu + mu * osc >= excess (excess = log-ratio by
/// which the unscaled sandwich fails, <= 0 when it holds).
double minimal_mu(double excess, double osc);

StabilityPoint stability_probe(const MultiscaleModel& v, int n, const Eigen::VectorXd& z, double r,
                               const StabilityConfig& config = {});

struct StabilityProbeSpec {
  int n = 0;
  Eigen::VectorXd z;
  double r = 1.0;
};

struct StabilityBattery {
  std::vector<StabilityPoint> points;
  double mu_max = 1.0;  // over conclusive points
  int inconclusive = 0;
};

StabilityBattery stability_battery(const MultiscaleModel& v, const std::vector<StabilityProbeSpec>& probes,
                                   const StabilityConfig& config = {});

}  // namespace homog
