#include "homog/sde/tail.hpp"

#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"
#include "homog/util/stats.hpp"
#include "stepper.hpp"

#include <algorithm>
#include <cmath>

namespace homog {

HeatTail heat_tail(const MultiscaleModel& v, const Eigen::VectorXd& x, const std::vector<double>& t_list,
                   const std::vector<double>& r_list, const SdeConfig& config, const TailWindow& window,
                   std::size_t min_hits) {
  const int d = v.dimension();
  if (d > 3) throw InvalidInput("heat tail: d <= 3");
  if (x.size() != d) throw InvalidInput("heat tail: start has wrong dimension");
  if (t_list.empty() || r_list.empty()) throw InvalidInput("heat tail: need times and radii");
  if (!std::is_sorted(t_list.begin(), t_list.end()) || !(t_list.front() > 0))
    throw InvalidInput("heat tail: times must be positive and increasing");
  for (double r : r_list)
    if (!(r > 0)) throw InvalidInput("heat tail: radii must be positive");

  HeatTail out;
  out.dt = resolve_dt(v, config);
  std::vector<std::uint64_t> steps;
  for (double t : t_list) steps.push_back(std::max<std::uint64_t>(1, std::llround(t / out.dt)));
  const std::size_t nt = steps.size(), np = config.paths;

  // Squared displacement of every path at every requested time.
  std::vector<double> disp(np * nt);
  const detail::Stepper stepper(v, out.dt, config.drift_sign, config.seed);
  parallel_for(np, [&](std::size_t p) {
    double y[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) y[a] = x[a];
    detail::StepState st;
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < nt; ++i) {
      for (; k < steps[i]; ++k) stepper.step(y, st, p, k, nullptr);
      double s = 0;
      for (int a = 0; a < d; ++a) s += (y[a] - x[a]) * (y[a] - x[a]);
      disp[p * nt + i] = s;
    }
  });

  for (std::size_t i = 0; i < nt; ++i)
    for (double r : r_list) {
      TailRecord rec;
      rec.t = static_cast<double>(steps[i]) * out.dt;
      rec.r = r;
      rec.paths = np;
      for (std::size_t p = 0; p < np; ++p)
        if (disp[p * nt + i] >= r * r) ++rec.hits;
      rec.p_hat = static_cast<double>(rec.hits) / static_cast<double>(np);
      auto ci = wilson_interval(rec.hits, np);
      rec.ci_lo = ci.lo;
      rec.ci_hi = ci.hi;
      out.records.push_back(rec);
    }
  out.fit = fit_walk_dimension(out.records, window, min_hits);
  return out;
}

bool TailWindow::admits(double t, double r) const {
  if (std::isnan(nu)) return true;
  return t >= c10 * r && t <= c11 * std::pow(r, 2 + nu);
}

TailFit fit_walk_dimension(const std::vector<TailRecord>& records, const TailWindow& window, std::size_t min_hits) {
  TailFit fit;
  std::vector<Eigen::Vector3d> rows;
  std::vector<double> ys;
  for (const auto& r : records) {
    if (r.hits < min_hits || r.paths - r.hits < min_hits || !window.admits(r.t, r.r)) continue;
    rows.emplace_back(1.0, std::log(r.r), std::log(r.t));
    ys.push_back(std::log(-std::log(r.p_hat)));
  }
  fit.cells = rows.size();
  if (rows.size() < 4) return fit;
  Eigen::MatrixXd a(rows.size(), 3);
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    y[static_cast<Eigen::Index>(i)] = ys[i];
  }
  // Both abscissae must vary independently for the collapse to be identified.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() <= 1e-9 * svd.singularValues().maxCoeff()) return fit;
  Eigen::Vector3d c = svd.solve(y);
  if (!(c[2] < 0)) return fit;
  fit.d_w = -c[1] / c[2];
  fit.shape = -c[2];
  fit.residual = std::sqrt((a * c - y).squaredNorm() / static_cast<double>(rows.size()));
  fit.valid = std::isfinite(fit.d_w);
  return fit;
}

CsvTable tail_table(const std::vector<TailRecord>& records) {
  CsvTable t;
  t.columns = {"t", "r", "p_hat", "ci_lo", "ci_hi", "paths"};
  for (const auto& r : records)
    t.add({format_number(r.t), format_number(r.r), format_number(r.p_hat), format_number(r.ci_lo),
           format_number(r.ci_hi), std::to_string(r.paths)});
  return t;
}

}  // namespace homog
