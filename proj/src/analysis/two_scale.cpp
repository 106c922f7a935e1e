#include "homog/analysis/two_scale.hpp"

#include "homog/field/measures.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace homog {
namespace {

EffectiveTensor solve(const PotentialExpr& v, const SolverConfig& config) {
  const int n = resolve_resolution(v.dimension(), v.max_frequency(), config);
  return effective_diffusivity(sample_grid(v, n), config);
}

// b <= a + tol |a| as quadratic forms.
bool form_leq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b - a);
  return es.eigenvalues().minCoeff() >= -tol * a.norm();
}

}  // namespace

ConvergenceStudy two_scale_convergence_study(const PotentialExpr& u, const PotentialExpr& t, const std::vector<long>& ratios,
                                             const SolverConfig& config) {
  if (u.dimension() != t.dimension()) throw InvalidInput("two-scale study: U and T must share the dimension");
  for (long r : ratios)
    if (r < 2) throw InvalidInput("two-scale study: every R must be an integer >= 2");
  config.validate();
  for (long r : ratios) {
    auto v = u.scaled(r) + t;
    resolve_resolution(v.dimension(), v.max_frequency(), config);
  }

  ConvergenceStudy s;
  s.d_u = solve(u, config);
  s.d_t = solve(t, config);
  s.d_ut = two_scale_diffusivity(s.d_u, t, config);
  s.rows.resize(ratios.size());
  parallel_for(ratios.size(), [&](std::size_t i) {
    ConvergenceRow& row = s.rows[i];
    row.ratio = ratios[i];
    row.combined = solve(u.scaled(ratios[i]) + t, config);
    auto fb = form_bounds(row.combined.matrix, s.d_ut.matrix);
    row.f_minus = fb.lower;
    row.f_plus = fb.upper;
    row.e = std::max(std::log(fb.upper), -std::log(fb.lower));
    const double tol = 10 * config.tolerance;
    row.corollary_holds = form_leq(s.d_u.lambda_min() * std::exp(-row.e) * s.d_t.matrix, row.combined.matrix, tol) &&
                          form_leq(row.combined.matrix, s.d_u.lambda_max() * std::exp(row.e) * s.d_t.matrix, tol);
  });
  return s;
}

CsvTable convergence_table(const ConvergenceStudy& study) {
  CsvTable t;
  t.columns = {"R", "f_minus", "f_plus", "e"};
  for (const auto& r : study.rows)
    t.add({std::to_string(r.ratio), format_number(r.f_minus), format_number(r.f_plus), format_number(r.e)});
  return t;
}

TranslationAudit translation_audit(const PotentialExpr& u, const PotentialExpr& t, long ratio,
                                   const std::vector<Eigen::VectorXd>& shifts, double alpha, const SolverConfig& config,
                                   double tol) {
  if (u.dimension() != t.dimension()) throw InvalidInput("translation audit: U and T must share the dimension");
  if (ratio < 1) throw InvalidInput("translation audit: R must be a positive integer");
  const int d = u.dimension();
  const auto base_v = u.scaled(ratio) + t;
  const int n = resolve_resolution(d, base_v.max_frequency(), config);
  for (const auto& y : shifts) {
    if (y.size() != d) throw InvalidInput("translation audit: shift has the wrong dimension");
    for (int a = 0; a < d; ++a) {
      const double cells = y[a] * n / static_cast<double>(ratio);
      if (std::abs(cells - std::round(cells)) > 1e-9)
        throw InvalidInput("translation audit: shift is not commensurate with the " + std::to_string(n) + "-point grid");
    }
  }

  TranslationAudit audit;
  audit.ratio = ratio;
  audit.holder_t = holder_seminorm(t, alpha).value;
  audit.bound = 4.0 * audit.holder_t / std::pow(static_cast<double>(ratio), alpha);
  SolverConfig fixed = config;
  fixed.resolution = n;
  audit.base = effective_diffusivity(sample_grid(base_v, n), fixed);
  audit.rows.resize(shifts.size());
  parallel_for(shifts.size(), [&](std::size_t i) {
    auto v = u.translated(shifts[i]).scaled(ratio) + t;
    auto shifted = effective_diffusivity(sample_grid(v, n), fixed);
    auto fb = form_bounds(shifted.matrix, audit.base.matrix);
    audit.rows[i] = {shifts[i], std::max({0.0, std::log(fb.upper), -std::log(fb.lower)})};
  });
  for (const auto& r : audit.rows) audit.max_g = std::max(audit.max_g, r.g);
  audit.within_bound = audit.max_g <= audit.bound + tol;
  return audit;
}

}  // namespace homog
