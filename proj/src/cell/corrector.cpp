#include "homog/cell/corrector.hpp"

#include "homog/cell/operator.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace homog {

void SolverConfig::validate() const {
  if (!(tolerance > 0.0 && tolerance <= 1e-4)) throw InvalidInput("solver: tolerance must lie in (0, 1e-4]");
  if (max_iterations < 100) throw InvalidInput("solver: max_iterations must be at least 100");
  if (points_per_oscillation < 4) throw InvalidInput("solver: points_per_oscillation must be at least 4");
  if (resolution != 0 && (resolution < 4 || !is_power_of_two(resolution)))
    throw InvalidInput("solver: resolution must be a power of two >= 4");
}

int resolve_resolution(int dim, int max_frequency, const SolverConfig& config) {
  config.validate();
  const long f = std::max(1, max_frequency);
  long n = config.resolution;
  if (n == 0) {
    n = std::max(16L, next_power_of_two(config.points_per_oscillation * f));
  } else if (n < 4 * f) {
    throw BudgetError("under-resolved: N = " + std::to_string(n) + " gives fewer than 4 points per oscillation at frequency " +
                      std::to_string(f));
  }
  double points = std::pow(static_cast<double>(n), dim);
  if (points > static_cast<double>(config.max_points))
    throw BudgetError("grid of " + std::to_string(n) + "^" + std::to_string(dim) + " points exceeds the budget of " +
                      std::to_string(config.max_points));
  return static_cast<int>(n);
}

CorrectorSolution solve_corrector(const GridField& u, const Eigen::MatrixXd& directions, const SolverConfig& config,
                                  const Eigen::MatrixXd& inner) {
  config.validate();
  const int d = u.dimension();
  if (directions.rows() != d) throw InvalidInput("corrector: directions must have d rows");

  // Shift by the mid-range before exponentiating; D is invariant under constants.
  const double lo = u.samples.minCoeff(), hi = u.samples.maxCoeff();
  const double c = 0.5 * (lo + hi);
  CorrectorSolution sol;
  sol.weight = GridField(u.shape, (-2.0 * (u.samples.array() - c)).exp().matrix());
  sol.mean_exp_minus2u = sol.weight.samples.mean() * std::exp(-2.0 * c);
  sol.mean_exp_2u = sol.weight.samples.cwiseInverse().mean() * std::exp(2.0 * c);
  sol.directions = directions;
  sol.discretization = config.discretization;

  auto op = CellOperator::create(sol.weight, inner, config.discretization, config.preconditioner);
  const auto m = static_cast<std::size_t>(directions.cols());
  sol.chi.resize(m);
  sol.residuals.assign(m, 0.0);
  sol.iterations.assign(m, 0);
  parallel_for(m, [&](std::size_t k) {
    Eigen::VectorXd b = op->rhs(directions.col(static_cast<Eigen::Index>(k)));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    // Relative to the size of the flux terms; a constant weight gives b at round-off.
    const double scale = op->mean_weight() * std::sqrt(double(b.size())) * directions.col(k).norm() * u.resolution();
    if (b.norm() > 1e-13 * scale) {
      sol.iterations[k] = pcg_solve(*op, b, x, config.tolerance, config.max_iterations);
      Eigen::VectorXd kx;
      op->apply(x, kx);
      sol.residuals[k] = (b - kx).norm() / b.norm();
    }
    sol.chi[k] = GridField(u.shape, std::move(x));
  });
  return sol;
}

EffectiveTensor effective_diffusivity(const GridField& u, const SolverConfig& config, CorrectorSolution* correctors,
                                      const Eigen::MatrixXd& inner) {
  const int d = u.dimension();
  const Eigen::MatrixXd dirs = Eigen::MatrixXd::Identity(d, d);
  CorrectorSolution sol = solve_corrector(u, dirs, config, inner);
  auto op = CellOperator::create(sol.weight, inner, config.discretization);
  std::vector<Eigen::VectorXd> chi;
  for (const auto& g : sol.chi) chi.push_back(g.samples);
  const double wbar = op->mean_weight();
  Eigen::MatrixXd energy = op->energy(dirs, chi) / wbar;
  Eigen::MatrixXd flux = op->flux(dirs, chi) / wbar;

  EffectiveTensor t = make_tensor(energy);
  t.asymmetry = (flux - flux.transpose()).cwiseAbs().maxCoeff();
  t.residual = *std::max_element(sol.residuals.begin(), sol.residuals.end());
  t.iterations = *std::max_element(sol.iterations.begin(), sol.iterations.end());
  t.resolution = u.resolution();
  if (correctors) *correctors = std::move(sol);
  return t;
}

EffectiveTensor effective_diffusivity(const GridField& u, const SolverConfig& config) {
  return effective_diffusivity(u, config, nullptr);
}

EffectiveTensor effective_diffusivity(const PotentialExpr& u, const SolverConfig& config) {
  const int n = resolve_resolution(u.dimension(), u.max_frequency(), config);
  return effective_diffusivity(sample_grid(u, n), config, nullptr);
}

EffectiveTensor two_scale_diffusivity(const EffectiveTensor& inner, const PotentialExpr& t, const SolverConfig& config) {
  if (inner.dimension() != t.dimension()) throw InvalidInput("two-scale: dimension mismatch");
  if (!(inner.lambda_min() > 0)) throw InvalidInput("two-scale: inner tensor must be positive definite");
  const int n = resolve_resolution(t.dimension(), t.max_frequency(), config);
  return effective_diffusivity(sample_grid(t, n), config, nullptr, inner.matrix);
}

}  // namespace homog
