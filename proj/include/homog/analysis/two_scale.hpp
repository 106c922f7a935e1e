#pragma once

#include "homog/cell/corrector.hpp"
#include "homog/cell/tensor.hpp"
#include "homog/field/potential.hpp"
#include "homog/util/csv.hpp"

#include <vector>

namespace homog {

struct ConvergenceRow {
  long ratio = 2;          // R
  double f_minus = 1.0;    // largest f with f D(U,T) <= D(S_R U + T)
  double f_plus = 1.0;     // smallest f with D(S_R U + T) <= f D(U,T)
  double e = 0.0;          // max(ln f_plus, -ln f_minus)
  EffectiveTensor combined;  // D(S_R U + T)
  /// lambda_min(D(U)) D(T) e^{-e} <= D(S_R U + T) <= lambda_max(D(U)) D(T) e^{e}
  bool corollary_holds = true;
};

struct ConvergenceStudy {
  EffectiveTensor d_u;   // D(U)
  EffectiveTensor d_t;   // D(T)
  EffectiveTensor d_ut;  // D(U, T): D(U) homogenized under T
  std::vector<ConvergenceRow> rows;
};

/// Compares D(S_R U + T) with the two-scale limit D(U, T) for each R >= 2.
ConvergenceStudy two_scale_convergence_study(const PotentialExpr& u, const PotentialExpr& t, const std::vector<long>& ratios,
                                             const SolverConfig& config = {});

/// Columns R, f_minus, f_plus, e.
CsvTable convergence_table(const ConvergenceStudy& study);

struct TranslationRow {
  Eigen::VectorXd y;
  double g = 0.0;  // smallest g with e^{-g} D(S_R U + T) <= D(S_R Theta_y U + T) <= e^{g} D(S_R U + T)
};

struct TranslationAudit {
  long ratio = 1;
  double holder_t = 0.0;  // probe estimate of the Holder seminorm of T
  double bound = 0.0;     // 4 |T|_alpha / R^alpha
  EffectiveTensor base;   // D(S_R U + T)
  std::vector<TranslationRow> rows;
  double max_g = 0.0;
  bool within_bound = true;
};

/// Shifts the fast scale by y (Theta_y U(x) = U(x + y)) and measures how far
/// D moves. Each y must be commensurate with the solve grid: y N / R integral.
TranslationAudit translation_audit(const PotentialExpr& u, const PotentialExpr& t, long ratio,
                                   const std::vector<Eigen::VectorXd>& shifts, double alpha = 1.0,
                                   const SolverConfig& config = {}, double tol = 1e-8);

}  // namespace homog
