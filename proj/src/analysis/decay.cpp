#include "homog/analysis/decay.hpp"

#include "homog/analysis/quadrature.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"
#include "homog/util/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>

namespace homog {
namespace {

// One effective tensor; d = 1 uses the closed-form harmonic mean.
EffectiveTensor solve_tensor(const PotentialExpr& v, const SolverConfig& config, int* resolution) {
  if (v.dimension() == 1) {
    auto q = harmonic_diffusivity_1d(v, 1e-10, config.max_points);
    EffectiveTensor t = make_tensor(Eigen::MatrixXd::Constant(1, 1, q.value));
    t.resolution = static_cast<int>(std::min<long>(q.points, std::numeric_limits<int>::max()));
    *resolution = t.resolution;
    return t;
  }
  const int n = resolve_resolution(v.dimension(), v.max_frequency(), config);
  *resolution = n;
  return effective_diffusivity(sample_grid(v, n), config);
}

void check_budget(const PotentialExpr& v, const SolverConfig& config) {
  if (v.dimension() == 1) {
    // The 1-d quadrature needs at least 8 points per finest oscillation.
    const double need = 8.0 * std::max(1, v.max_frequency());
    if (need > static_cast<double>(config.max_points))
      throw BudgetError("decay scan: 1-d quadrature at frequency " + std::to_string(v.max_frequency()) +
                        " exceeds the budget of " + std::to_string(config.max_points) + " points");
    return;
  }
  resolve_resolution(v.dimension(), v.max_frequency(), config);
}

}  // namespace

DecayScan decay_scan(const MultiscaleModel& model, int n_max, const SolverConfig& config) {
  if (n_max < 0 || n_max >= model.scale_count())
    throw InvalidInput("decay scan: n_max must lie in [0, " + std::to_string(model.scale_count() - 1) + "]");
  config.validate();

  std::vector<PotentialExpr> levels;
  for (int n = 0; n <= n_max; ++n) levels.push_back(model.unit_torus_potential(n));
  // The frequency grows with n, so the last level decides the budget.
  check_budget(levels.back(), config);

  DecayScan scan;
  scan.records.resize(n_max + 1);
  parallel_for(levels.size(), [&](std::size_t n) {
    auto t0 = std::chrono::steady_clock::now();
    DecayRecord& r = scan.records[n];
    r.n = static_cast<int>(n);
    r.period = model.period(r.n);
    r.tensor = solve_tensor(levels[n], config, &r.resolution);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  // Per-scale tensors, solved once per distinct scale.
  std::map<std::string, EffectiveTensor> cache;
  for (int k = 0; k <= n_max; ++k) {
    const std::string key = model.scale(k).to_json().dump();
    auto it = cache.find(key);
    if (it == cache.end()) {
      int res = 0;
      it = cache.emplace(key, solve_tensor(model.scale(k), config, &res)).first;
    }
    scan.scale_tensors.push_back(it->second);
  }

  // Tail window: the last ceil(n_max / 2) levels, at least two points.
  if (n_max >= 1) {
    const int len = std::max(2, (n_max + 1) / 2);
    std::vector<double> x, yp, ym;
    for (int n = n_max - len + 1; n <= n_max; ++n) {
      x.push_back(n);
      yp.push_back(std::log(scan.records[n].tensor.lambda_max()));
      ym.push_back(std::log(scan.records[n].tensor.lambda_min()));
    }
    auto fp = fit_line(x, yp), fm = fit_line(x, ym);
    scan.rate = {fp.slope, fm.slope, fp.residual_rms, fm.residual_rms, n_max - len + 1, n_max};
  }

  scan.rho_min = model.rho_min();
  scan.k_alpha = model.truncated(n_max).k_alpha();
  scan.outside_hypothesis = std::pow(static_cast<double>(scan.rho_min), model.alpha()) < scan.k_alpha;
  return scan;
}

SandwichAudit sandwich_audit(const std::vector<DecayRecord>& records, const std::vector<EffectiveTensor>& scale_tensors) {
  SandwichAudit audit;
  double log_lo = 0, log_hi = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int n = records[i].n;
    if (n != static_cast<int>(i)) throw InvalidInput("sandwich audit: records must be indexed 0, 1, 2, ...");
    if (static_cast<std::size_t>(n) >= scale_tensors.size())
      throw InvalidInput("sandwich audit: missing per-scale tensor for n = " + std::to_string(n));
    log_lo += std::log(scale_tensors[n].lambda_min());
    log_hi += std::log(scale_tensors[n].lambda_max());
    double eps = 0.0;
    if (n > 0) {
      const auto& t = records[i].tensor;
      eps = std::max({0.0, (log_lo - std::log(t.lambda_min())) / n, (std::log(t.lambda_max()) - log_hi) / n});
    }
    audit.eps_hat.push_back(eps);
    audit.max_eps = std::max(audit.max_eps, eps);
  }
  return audit;
}

CsvTable decay_table(const DecayScan& scan, const SandwichAudit& audit, bool with_seconds) {
  CsvTable t;
  t.columns = {"n", "R_n", "lambda_min", "lambda_max", "ln_lambda_max", "eps_hat", "N"};
  if (with_seconds) t.columns.push_back("seconds");
  for (std::size_t i = 0; i < scan.records.size(); ++i) {
    const auto& r = scan.records[i];
    std::vector<std::string> row = {std::to_string(r.n),
                                    std::to_string(r.period),
                                    format_number(r.tensor.lambda_min()),
                                    format_number(r.tensor.lambda_max()),
                                    format_number(std::log(r.tensor.lambda_max())),
                                    format_number(i < audit.eps_hat.size() ? audit.eps_hat[i] : 0.0),
                                    std::to_string(r.resolution)};
    if (with_seconds) row.push_back(format_number(r.seconds));
    t.add(std::move(row));
  }
  return t;
}

}  // namespace homog
