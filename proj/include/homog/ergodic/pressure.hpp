#pragma once

#include "homog/field/potential.hpp"
#include "homog/util/csv.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace homog {

/// Trapezoid quadrature of Birkhoff integrals on the unit torus. The grid
/// has M = pow2(q * rho^{n-1} * f_max) nodes per axis, so U(rho^k x) is an
/// exact index lookup into one table of U samples.
struct QuadratureConfig {
  int q = 8;
  std::size_t max_points = std::size_t{1} << 24;
  /// Also evaluate at 2M and report |ln I_n(2M) - ln I_n(M)|.
  bool check_stability = false;

  void validate() const;
};

struct BirkhoffIntegral {
  int n = 0;
  double log_integral = 0.0;  // ln of mean_x exp(sum_{k<n} U(rho^k x))
  long resolution = 1;        // M per axis
  double stability = -1.0;    // doubling change, -1 when not checked
};

/// ln I_n with I_n = integral of exp(sum_{k<n} U(rho^k x)), log-sum-exp
/// stable. BudgetError when M^d exceeds the point budget.
BirkhoffIntegral birkhoff_log_integral(const PotentialExpr& u, long rho, int n, const QuadratureConfig& config = {});

/// Largest n whose quadrature grid fits the budget (0 if none).
int max_feasible_n(const PotentialExpr& u, long rho, const QuadratureConfig& config = {}, int oversample = 0);

struct PressureEstimate {
  long rho = 2;
  std::vector<BirkhoffIntegral> terms;  // n = first..last
  double slope = 0.0;                   // least-squares P
  double slope_stderr = 0.0;
  double residual = 0.0;                // rms of the linear fit
  double aitken = 0.0;                  // Aitken-accelerated last increment
  int first = 0;
  int last = 0;
};

/// Slope of ln I_n over n = first..last (at least three points).
PressureEstimate pressure_estimate(const PotentialExpr& u, long rho, int first, int last,
                                   const QuadratureConfig& config = {});

struct CocycleConfig {
  int oversample = 4;  // probe points per finest Birkhoff oscillation
  /// Positive limsup when the fitted limit exceeds threshold * Osc(U).
  double threshold = 0.02;
  std::size_t max_points = std::size_t{1} << 24;
};

/// a_n = (1/n) max over probe nodes of |sum_{k<n} (U(rho^k x) - mean U)|.
/// The limsup is the intercept c of a least-squares fit a_n = c + b / n over
/// the tail window (the last max(3, ceil(n_max / 2)) values).
struct CocycleEstimate {
  long rho = 2;
  std::vector<double> a;  // a[n - 1] for n = 1..n_max
  double limsup = 0.0;
  double oscillation = 0.0;
  double threshold = 0.0;  // absolute: CocycleConfig::threshold * oscillation
  bool positive = false;
  int first = 0;
  int last = 0;
};

CocycleEstimate cocycle_criterion(const PotentialExpr& u, long rho, int n_max, const CocycleConfig& config = {});

struct ZConfig {
  QuadratureConfig quadrature;
  int n_cap = 14;             // largest n used in the slope fits
  double abs_tolerance = 1e-6;  // added to 3 sigma in the classification
};

/// Z = -(P(2U) + P(-2U)) with sigma from the two slope standard errors.
struct ZEstimate {
  long rho = 2;
  PressureEstimate plus;   // P(2U)
  PressureEstimate minus;  // P(-2U)
  double z = 0.0;
  double sigma = 0.0;
  double aitken = 0.0;     // same combination of the Aitken estimates
  std::string classification;  // "negative", "zero" or "positive"
};

/// Fit window: n = max(1, n_max / 2)..n_max, n_max = min(n_cap, feasible).
ZEstimate z_functional(const PotentialExpr& u, long rho, const ZConfig& config = {});

/// Rows n, ln_I_n, resolution.
CsvTable pressure_table(const PressureEstimate& p);

/// {rho, P_2U, P_minus2U, Z, Z_sigma, criterion_limsup, classification}.
nlohmann::json pressure_summary(const ZEstimate& z, const CocycleEstimate& c);

}  // namespace homog
