#pragma once

#include "homog/cell/corrector.hpp"

#include <array>

namespace homog {

/// (mean e^{2U} mean e^{-2U})^{-1}, by trapezoid refinement to 1e-10 relative.
double voigt_reiss(const PotentialExpr& u);

/// Q(U): inf over divergence-free mean-zero p of mean(e^{2U}|l - p|^2) / mean(e^{2U}).
/// Requires d >= 2.
EffectiveTensor dual_diffusivity(const PotentialExpr& u, const SolverConfig& config = {});

/// Fourier inversion of the divergence-free flux defect P^U.
struct StreamTensor {
  GridShape shape;
  int dim = 0;
  /// h[(i * d + j) * d + m] holds H_ijm on the grid.
  std::vector<Eigen::VectorXd> h;
  /// p[i * d + m] holds P^U_im on the grid.
  std::vector<Eigen::VectorXd> p;
  EffectiveTensor diffusivity;

  const Eigen::VectorXd& H(int i, int j, int m) const { return h[(i * dim + j) * dim + m]; }
  const Eigen::VectorXd& P(int i, int m) const { return p[i * dim + m]; }

  /// max |H_ijm + H_jim| over the grid.
  double skew_defect() const;
  /// max |sum_j d_j H_ijm - P_im|, derivatives taken spectrally.
  double divergence_defect() const;
};

/// Builds P^U from spectral correctors and H from its Fourier coefficients.
StreamTensor stream_tensor(const PotentialExpr& u, const SolverConfig& config = {});

}  // namespace homog
