#pragma once

#include "homog/cell/tensor.hpp"
#include "homog/field/grid_field.hpp"
#include "homog/field/potential.hpp"

#include <vector>

namespace homog {

enum class Discretization {
  /// Node-centred finite volumes, harmonic face weights. Second order.
  FiniteVolume,
  /// Fourier collocation with the Nyquist modes removed. Spectral accuracy
  /// for smooth potentials.
  Spectral,
};

enum class Preconditioner {
  /// Constant-coefficient operator inverted by FFT.
  Fourier,
  /// Galerkin multigrid V-cycle (finite volumes, d <= 2). Iteration counts
  /// stay flat as the weight contrast e^{2 Osc} grows.
  Multigrid,
};

struct SolverConfig {
  double tolerance = 1e-9;        // relative residual
  int max_iterations = 20000;
  int points_per_oscillation = 16;
  int resolution = 0;             // 0: use the policy
  Discretization discretization = Discretization::FiniteVolume;
  Preconditioner preconditioner = Preconditioner::Fourier;
  std::size_t max_points = std::size_t{1} << 24;

  void validate() const;
};

/// Grid resolution for a potential of the given per-axis frequency bound:
/// the explicit resolution if set (checked against under-resolution), else
/// the next power of two above points_per_oscillation * max frequency.
int resolve_resolution(int dim, int max_frequency, const SolverConfig& config);

struct CorrectorSolution {
  std::vector<GridField> chi;        // one per direction, zero mean
  GridField weight;                  // e^{-2U} up to a constant factor
  double mean_exp_minus2u = 1.0;     // mean of e^{-2U} on the grid
  double mean_exp_2u = 1.0;          // mean of e^{2U} on the grid
  std::vector<double> residuals;     // final relative residual per direction
  std::vector<int> iterations;
  Eigen::MatrixXd directions;        // columns are the solved l
  Discretization discretization = Discretization::FiniteVolume;
};

/// Solves div(w A (l - grad chi)) = 0 on the unit torus for each column l of
/// `directions`, with w = e^{-2u} sampled on u's grid and A = inner (the
/// identity when empty). Throws SolverError on non-convergence.
CorrectorSolution solve_corrector(const GridField& u, const Eigen::MatrixXd& directions, const SolverConfig& config,
                                  const Eigen::MatrixXd& inner = {});

/// D(U) from d corrector solves.
EffectiveTensor effective_diffusivity(const PotentialExpr& u, const SolverConfig& config = {});
EffectiveTensor effective_diffusivity(const GridField& u, const SolverConfig& config = {});
/// Same, also returning the correctors.
EffectiveTensor effective_diffusivity(const GridField& u, const SolverConfig& config, CorrectorSolution* correctors,
                                      const Eigen::MatrixXd& inner = {});

/// D(U, T): homogenization of the constant inner tensor D_inner under the
/// outer potential T.
EffectiveTensor two_scale_diffusivity(const EffectiveTensor& inner, const PotentialExpr& t,
                                      const SolverConfig& config = {});

}  // namespace homog
