#pragma once

#include "homog/field/multiscale_model.hpp"
#include "homog/util/csv.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace homog {

/// Euler-Maruyama for dy = dw - grad V(y) dt.
///
/// The step obeys dt <= min(c1 / |grad V|_inf^2, c2 * wavelength^2), where the
/// wavelength is that of the finest scale; dt = 0 picks that bound (or
/// 1e-3 when V is constant). Between grid times the path is treated as a
/// Brownian bridge: a step that stays inside still exits with probability
/// exp(-2 d0 d1 / dt) (d0, d1 = distances to the sphere at both ends), which
/// removes the O(sqrt dt) overshoot bias of discrete monitoring.
struct SdeConfig {
  double dt = 0.0;
  std::uint64_t seed = 1;
  std::size_t paths = 10000;
  double c1 = 0.01;
  double c2 = 0.01;
  bool bridge = true;
  double censor_factor = 1e4;           // paths stop at t = censor_factor * r^2
  double max_censored_fraction = 0.01;  // above this the record is invalid
  /// Multiplies the drift; -1 flips its sign (mutation testing only).
  double drift_sign = 1.0;

  void validate() const;
};

struct DtPolicy {
  double gradient_bound = 0.0;  // |grad V|_inf estimate
  double wavelength = 0.0;      // finest wavelength, +inf for constant V
  double limit = 0.0;           // min(c1 / G^2, c2 * wavelength^2)
};

DtPolicy dt_policy(const MultiscaleModel& v, const SdeConfig& config);
/// The step actually used: config.dt if set (InvalidInput above the policy
/// limit), else the limit.
double resolve_dt(const MultiscaleModel& v, const SdeConfig& config);

struct ExitTimeRecord {
  double r = 0.0;
  std::string start;  // "gibbs-ball" or the start point, e.g. "0" or "0.5;0"
  double tau_mean = 0.0;
  double stderr_ = 0.0;
  std::size_t paths = 0;
  double dt = 0.0;
  std::size_t censored = 0;
  bool valid = true;
  std::string diagnostics;
};

/// Exit of B(center, r). With start empty the start points are drawn from
/// the Gibbs measure m_{V,r} on the ball (same seed, separate stream).
ExitTimeRecord mean_exit_time(const MultiscaleModel& v, double r, const Eigen::VectorXd& center,
                              const std::optional<Eigen::VectorXd>& start, const SdeConfig& config);

/// Rejection sampler for m_{V,r}(dx) proportional to e^{-2V} on B(center, r).
/// Sample i is a pure function of (seed, i).
class GibbsBallSampler {
 public:
  GibbsBallSampler(const MultiscaleModel& v, Eigen::VectorXd center, double r, std::uint64_t seed);
  GibbsBallSampler(MultiscaleModel&&, Eigen::VectorXd, double, std::uint64_t) = delete;  // keeps a pointer
  Eigen::VectorXd sample(std::uint64_t i) const;
  /// Lower bound on V over the ball used in the acceptance ratio.
  double floor() const noexcept { return floor_; }
  /// Proposals drawn for sample i (diagnostics).
  std::uint64_t attempts(std::uint64_t i) const;

 private:
  bool propose(std::uint64_t i, std::uint64_t attempt, double* x) const;

  const MultiscaleModel* v_;
  Eigen::VectorXd center_;
  double r_;
  std::uint64_t seed_;
  double floor_ = 0.0;
};

/// Pointwise nu(r) = ln tau / ln r - 2 and the slope of ln tau against ln r
/// (minus 2), weighted by the Monte Carlo errors.
struct ExponentFit {
  std::vector<double> r;
  std::vector<double> nu;
  std::vector<double> nu_stderr;
  double nu_slope = 0.0;
  double nu_slope_stderr = 0.0;
};

/// Needs at least three valid records with increasing radii; when scale
/// lengths are given, at least two of them must lie within [r_1, r_m].
ExponentFit exit_exponent_fit(const std::vector<ExitTimeRecord>& records,
                              const std::vector<long>& scale_lengths = {});

/// [ln(1/l_max)/ln rho_max - slack, ln(1/l_min)/ln rho_min + slack], slack = 2 / ln r.
struct ExponentWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double nu) const { return nu >= lo && nu <= hi; }
};
ExponentWindow exponent_window(double lambda_min, double lambda_max, long rho_min, long rho_max, double r);

/// Columns r, start, tau_mean, stderr, paths, dt, censored.
CsvTable exit_table(const std::vector<ExitTimeRecord>& records);

/// {nu_pointwise: [[r, nu]], nu_slope, d_w (when given), windows: [[r, lo, hi]]}.
nlohmann::json exponent_summary(const ExponentFit& fit, const std::vector<ExponentWindow>& windows,
                                std::optional<double> d_w = std::nullopt);

}  // namespace homog
