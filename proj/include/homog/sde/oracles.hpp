#pragma once

#include "homog/cell/corrector.hpp"
#include "homog/field/multiscale_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace homog {

// Deterministic exit-time and Green-function oracles for the generator
// L_V = (1/2) Laplacian - grad V . grad = (1/2) e^{2V} div(e^{-2V} grad).

/// E_x[tau((a, b))] in d = 1 from the closed form
///   f(x) = 2 (C S(x) - int_a^x e^{2V(y)} M(y) dy),
///   S(x) = int_a^x e^{2V}, M(y) = int_a^y e^{-2V}, C fixed by f(b) = 0,
/// with nested trapezoid sums and Romberg extrapolation to `tol` relative.
double exact_exit_time_1d(const MultiscaleModel& v, double a, double b, double x, double tol = 1e-8);
double exact_exit_time_1d(const PotentialExpr& v, double a, double b, double x, double tol = 1e-8);

/// E_{m_{V,r}}[tau] for the interval (c - r, c + r) started from the Gibbs
/// measure restricted to it.
double gibbs_exit_time_1d(const MultiscaleModel& v, double center, double r, double tol = 1e-8);

/// f = E_x[tau((a, b))] at n + 1 equispaced nodes, one Richardson step.
struct ExitProfile1d {
  std::vector<double> x;
  std::vector<double> f;
};
ExitProfile1d exit_profile_1d(const MultiscaleModel& v, double a, double b, long n);

struct PdeExitConfig {
  int points_per_wavelength = 8;
  int min_points_per_radius = 16;
  std::size_t max_nodes = std::size_t{1} << 22;
};

/// Finite-volume solve of div(e^{-2V} grad f) = -2 e^{-2V} on the nodes of a
/// square grid inside B(center, r), f = 0 at the first node outside (a
/// staircase boundary, first order). d = 2.
struct PdeExitResult {
  double h = 0.0;
  int m = 0;                    // nodes per axis = 2m + 1, centre node (m, m)
  Eigen::Vector2d center{0, 0};
  double r = 0.0;
  Eigen::VectorXd f;            // row-major (i along x), NaN outside the disc
  double center_value = 0.0;
  /// f(center) lambda_max(D(U)) / r^2 (NaN unless solved from a periodic U).
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double lambda_max = std::numeric_limits<double>::quiet_NaN();

  Eigen::Vector2d node(int i, int j) const { return center + h * Eigen::Vector2d(i - m, j - m); }
  double at(int i, int j) const { return f[static_cast<Eigen::Index>(i) * (2 * m + 1) + j]; }
};

PdeExitResult pde_exit_time(const MultiscaleModel& v, const Eigen::Vector2d& center, double r,
                            const PdeExitConfig& config = {});
/// Periodic U: also reports the ratio against lambda_max(D(U)).
PdeExitResult pde_exit_time(const PotentialExpr& u, double r, const PdeExitConfig& config = {},
                            const SolverConfig& cell = {});

/// Verifies L_U psi_l = l^T D(U) l for psi_l = (l.x - chi_l)^2 - phi_l, where
/// L_U phi_l = |l - grad chi_l|^2 - l^T D l. chi, phi and D come from the
/// finite-volume cell operator on an N^d grid; the identity is measured with
/// an independent central-difference form of L_U using the exact grad U.
struct ErgodicityReport {
  int n = 0;
  double ldl = 0.0;            // l^T D(U) l
  double residual = 0.0;       // ||L_U psi - l^T D l||_{L2} / l^T D l
  double rhs_mean = 0.0;       // m_U-mean of the phi right-hand side, relative
  int chi_iterations = 0;
  int phi_iterations = 0;
};
ErgodicityReport ergodicity_check(const PotentialExpr& u, const Eigen::VectorXd& l, int n, double tol = 1e-12);

/// Discrete Green forms on (0,1)^d with n interior nodes per axis and zero
/// Dirichlet data. Q = e^{-2U}, M = e^{-2(U+P)}, lambda = e^{2 Osc(P)}; the
/// check is int G_Q f f <= lambda int G_M f f for random probes f.
struct GreenReport {
  double lambda = 1.0;
  bool hypothesis_holds = true;     // M <= lambda Q at every sampled point
  std::vector<double> q_forms;      // int G_Q f f
  std::vector<double> m_forms;      // int G_M f f
  std::vector<double> ratios;       // q / (lambda m)
  bool all_hold = true;
};
GreenReport green_monotonicity_check(const PotentialExpr& u, const PotentialExpr& p, int n, int probes,
                                     std::uint64_t seed = 1);

}  // namespace homog
