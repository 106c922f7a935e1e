#pragma once

#include "homog/sde/exit_time.hpp"

#include <limits>
#include <vector>

namespace homog {

/// Monte Carlo estimate of P_x[|y_t - x| >= r] with a 95% Wilson interval.
/// Cells without hits keep p_hat = 0 and are usable as upper bounds only.
struct TailRecord {
  double t = 0.0;
  double r = 0.0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  std::size_t paths = 0;
  std::size_t hits = 0;
};

/// Walk dimension from the scaling collapse of the tail: the least-squares
/// fit ln(-ln P) = a + b ln r + c ln t over cells with at least min_hits
/// hits and misses gives d_w = -b / c (P depends on r^{d_w} / t only), and
/// shape = -c, the exponent of the stretched tail (r^{d_w}/t)^{1/(d_w - 1)}
/// when that form holds exactly.
struct TailFit {
  double d_w = 0.0;
  double shape = 0.0;
  double residual = 0.0;
  std::size_t cells = 0;
  bool valid = false;
};

/// Cells used by the fit: c10 r <= t <= c11 r^{2 + nu}, the small-time tail
/// regime. nu = NaN keeps every cell.
struct TailWindow {
  double nu = std::numeric_limits<double>::quiet_NaN();
  double c10 = 1.0;
  double c11 = 1.0;
  bool admits(double t, double r) const;
};

struct HeatTail {
  std::vector<TailRecord> records;  // t-major, r-minor
  TailFit fit;
  double dt = 0.0;
};

HeatTail heat_tail(const MultiscaleModel& v, const Eigen::VectorXd& x, const std::vector<double>& t_list,
                   const std::vector<double>& r_list, const SdeConfig& config, const TailWindow& window = {},
                   std::size_t min_hits = 10);

TailFit fit_walk_dimension(const std::vector<TailRecord>& records, const TailWindow& window = {},
                           std::size_t min_hits = 10);

/// Columns t, r, p_hat, ci_lo, ci_hi, paths.
CsvTable tail_table(const std::vector<TailRecord>& records);

}  // namespace homog
