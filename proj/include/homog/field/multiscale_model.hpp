#pragma once

#include "homog/field/potential.hpp"

#include <json.hpp>

#include <vector>

namespace homog {

/// Ordered scales U_0..U_n with integer ratios r_k = R_k / R_{k-1} >= 2.
/// The multiscale potential is V_p^n(x) = sum_{k=p}^n U_k(x / R_k).
class MultiscaleModel {
 public:
  MultiscaleModel(std::vector<PotentialExpr> scales, std::vector<long> ratios, double alpha = 1.0);

  /// U repeated n+1 times with R_k = rho^k.
  static MultiscaleModel self_similar(const PotentialExpr& u, long rho, int n, double alpha = 1.0);

  int dimension() const noexcept { return scales_.front().dimension(); }
  int scale_count() const noexcept { return static_cast<int>(scales_.size()); }
  double alpha() const noexcept { return alpha_; }
  const PotentialExpr& scale(int k) const { return scales_.at(k); }
  const std::vector<PotentialExpr>& scales() const noexcept { return scales_; }
  const std::vector<long>& ratios() const noexcept { return ratios_; }
  /// R_k = prod_{j<=k} r_j, R_0 = 1.
  long period(int k) const { return periods_.at(k); }

  long rho_min() const;
  long rho_max() const;
  /// K_0 = max_k Osc(U_k), probe estimate.
  double k0() const;
  /// K_alpha = max_k Holder seminorm of U_k, probe estimate.
  double k_alpha() const;

  /// Model truncated to scales 0..n.
  MultiscaleModel truncated(int n) const;

  double evaluate(int p, int n, const double* x, double* grad) const;
  double evaluate(int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// V_0^n(R_n x): the potential of scales 0..n rescaled to the unit torus.
  PotentialExpr unit_torus_potential(int n) const;

  nlohmann::json to_json() const;
  static MultiscaleModel from_json(const nlohmann::json& j);

 private:
  std::vector<PotentialExpr> scales_;
  std::vector<long> ratios_;
  std::vector<long> periods_;
  double alpha_ = 1.0;
};

/// V_p^n(x) = sum_{k=p}^n U_k(x / R_k), evaluated on R^d.
double multiscale_evaluate(const MultiscaleModel& model, int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd multiscale_gradient(const MultiscaleModel& model, int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace homog
