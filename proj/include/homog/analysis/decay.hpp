#pragma once

#include "homog/cell/corrector.hpp"
#include "homog/cell/tensor.hpp"
#include "homog/field/multiscale_model.hpp"
#include "homog/util/csv.hpp"

#include <vector>

namespace homog {

/// D(V_0^n) for one truncation level, solved on the period-R_n torus
/// rescaled to the unit torus.
struct DecayRecord {
  int n = 0;
  long period = 1;  // R_n
  EffectiveTensor tensor;
  int resolution = 0;
  double seconds = 0.0;
};

/// Least-squares slopes of ln lambda_max / ln lambda_min against n over
/// the tail window [first, last].
struct RateEstimate {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  double residual_plus = 0.0;
  double residual_minus = 0.0;
  int first = 0;
  int last = -1;  // empty window when last < first

  bool empty() const noexcept { return last <= first; }
};

struct DecayScan {
  std::vector<DecayRecord> records;
  /// D(U_k) for k = 0..n_max, each on its own unit torus.
  std::vector<EffectiveTensor> scale_tensors;
  RateEstimate rate;
  long rho_min = 0;
  double k_alpha = 0.0;
  /// rho_min^alpha < K_alpha: the sandwich theorem makes no claim here.
  bool outside_hypothesis = false;
};

/// Solves D(V_0^n) for n = 0..n_max. The resolution of the finest level is
/// checked against the budget before any solve starts (BudgetError).
DecayScan decay_scan(const MultiscaleModel& model, int n_max, const SolverConfig& config = {});

/// Minimal eps >= 0 with
///   e^{-n eps} prod_k lambda_min(D(U_k)) <= D(V_0^n) <= e^{n eps} prod_k lambda_max(D(U_k))
/// for each n (eps = 0 at n = 0), and the maximum over n.
struct SandwichAudit {
  std::vector<double> eps_hat;
  double max_eps = 0.0;
};

SandwichAudit sandwich_audit(const std::vector<DecayRecord>& records, const std::vector<EffectiveTensor>& scale_tensors);

/// Rows n, R_n, lambda_min, lambda_max, ln_lambda_max, eps_hat, N, and
/// seconds when requested (wall time breaks byte-reproducibility).
CsvTable decay_table(const DecayScan& scan, const SandwichAudit& audit, bool with_seconds = false);

}  // namespace homog
