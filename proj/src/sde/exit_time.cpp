#include "homog/sde/exit_time.hpp"

#include "homog/field/grid_field.hpp"
#include "homog/sde/random.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"
#include "homog/util/stats.hpp"
#include "stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homog {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// max |grad U| over a probe grid of the unit torus, 16 nodes per oscillation.
double gradient_sup(const PotentialExpr& u) {
  const int d = u.dimension();
  const int f = u.max_frequency();
  if (f == 0) return 0.0;
  long n = next_power_of_two(16L * f);
  while (d > 1 && std::pow(static_cast<double>(n), d) > double(1 << 20)) n /= 2;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);
  double best = 0, x[3], g[3];
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (int a = 0; a < d; ++a) {
      x[a] = static_cast<double>(rest % n) / n;
      rest /= n;
    }
    u.evaluate(x, g);
    double s = 0;
    for (int a = 0; a < d; ++a) s += g[a] * g[a];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

double finest_wavelength(const MultiscaleModel& v) {
  double w = kInf;
  for (int k = 0; k < v.scale_count(); ++k) {
    const int f = v.scale(k).max_frequency();
    if (f > 0) w = std::min(w, static_cast<double>(v.period(k)) / f);
  }
  return w;
}

double gradient_bound(const MultiscaleModel& v) {
  double g = 0;
  for (int k = 0; k < v.scale_count(); ++k) g += gradient_sup(v.scale(k)) / static_cast<double>(v.period(k));
  return g;
}

std::string point_label(const Eigen::VectorXd& x) {
  std::string s;
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    if (a) s += ';';
    s += format_number(x[a]);
  }
  return s;
}

// Probability that a Brownian bridge between two interior points touched the
// sphere; half-space approximation for d >= 2, both ends of the interval in d = 1.
double bridge_probability(int d, const double* y0, const double* y1, const double* c, double r, double dt) {
  // exp(-kCut) is far below the 2^-32 resolution of the uniform it is compared with.
  constexpr double kCut = 60.0;
  auto term = [&](double e0, double e1) {
    const double q = 2.0 * e0 * e1 / dt;
    return q > kCut ? 0.0 : std::exp(-q);
  };
  if (d == 1) {
    const double a0 = y0[0] - c[0], a1 = y1[0] - c[0];
    return std::min(1.0, term(r - a0, r - a1) + term(r + a0, r + a1));
  }
  double s0 = 0, s1 = 0;
  for (int a = 0; a < d; ++a) {
    s0 += (y0[a] - c[a]) * (y0[a] - c[a]);
    s1 += (y1[a] - c[a]) * (y1[a] - c[a]);
  }
  return term(r - std::sqrt(s0), r - std::sqrt(s1));
}

}  // namespace

void SdeConfig::validate() const {
  if (dt < 0 || !std::isfinite(dt)) throw InvalidInput("sde: dt must be positive (or 0 for the policy value)");
  if (paths < 100) throw InvalidInput("sde: path budget must be at least 100");
  if (!(c1 > 0) || !(c2 > 0)) throw InvalidInput("sde: dt policy constants must be positive");
  if (!(censor_factor > 0)) throw InvalidInput("sde: censor factor must be positive");
  if (max_censored_fraction < 0 || max_censored_fraction > 1)
    throw InvalidInput("sde: censored fraction must lie in [0, 1]");
  if (drift_sign != 1.0 && drift_sign != -1.0) throw InvalidInput("sde: drift sign must be +1 or -1");
}

DtPolicy dt_policy(const MultiscaleModel& v, const SdeConfig& config) {
  DtPolicy p;
  p.gradient_bound = gradient_bound(v);
  p.wavelength = finest_wavelength(v);
  const double a = p.gradient_bound > 0 ? config.c1 / (p.gradient_bound * p.gradient_bound) : kInf;
  const double b = std::isfinite(p.wavelength) ? config.c2 * p.wavelength * p.wavelength : kInf;
  p.limit = std::min(a, b);
  return p;
}

double resolve_dt(const MultiscaleModel& v, const SdeConfig& config) {
  config.validate();
  const auto p = dt_policy(v, config);
  if (config.dt == 0.0) return std::isfinite(p.limit) ? p.limit : 1e-3;
  if (config.dt > p.limit * (1 + 1e-12))
    throw InvalidInput("sde: dt = " + format_number(config.dt) + " exceeds the policy limit " + format_number(p.limit));
  return config.dt;
}

// ------------------------------------------------------------------ Gibbs

GibbsBallSampler::GibbsBallSampler(const MultiscaleModel& v, Eigen::VectorXd center, double r, std::uint64_t seed)
    : v_(&v), center_(std::move(center)), r_(r), seed_(seed) {
  const int d = v.dimension();
  if (center_.size() != d) throw InvalidInput("gibbs sampler: center has wrong dimension");
  if (!(r > 0)) throw InvalidInput("gibbs sampler: radius must be positive");
  if (d > 3) throw InvalidInput("gibbs sampler: d <= 3");
  // Floor of V on the ball: grid minimum minus the worst variation between
  // grid nodes, so the acceptance ratio never exceeds one.
  const int top = v.scale_count() - 1;
  const double wl = finest_wavelength(v);
  if (!std::isfinite(wl)) {
    floor_ = v.evaluate(0, top, center_);
    return;
  }
  const double g = gradient_bound(v);
  long per_axis = static_cast<long>(std::ceil(2 * r / (wl / 16))) + 1;
  const double cap = std::pow(double(1 << 22), 1.0 / d);
  per_axis = std::min<long>(per_axis, static_cast<long>(cap));
  const double h = 2 * r / static_cast<double>(per_axis - 1);
  double lo = kInf, x[3];
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(per_axis);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (int a = 0; a < d; ++a) {
      x[a] = center_[a] - r + h * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
    lo = std::min(lo, v.evaluate(0, top, x, nullptr));
  }
  floor_ = lo - g * h * std::sqrt(static_cast<double>(d));
}

bool GibbsBallSampler::propose(std::uint64_t i, std::uint64_t attempt, double* x) const {
  const int d = v_->dimension();
  auto w = Philox4x32::generate(StreamCounter::make(i, attempt, 0, true), Philox4x32::key_of(seed_));
  double s = 0;
  for (int a = 0; a < d; ++a) {
    const double u = 2 * uniform_closed0(w[a]) - 1;
    x[a] = center_[a] + r_ * u;
    s += u * u;
  }
  if (s >= 1.0) return false;
  const double accept = std::exp(-2.0 * (v_->evaluate(0, v_->scale_count() - 1, x, nullptr) - floor_));
  return uniform_closed0(w[3]) < accept;
}

Eigen::VectorXd GibbsBallSampler::sample(std::uint64_t i) const {
  Eigen::VectorXd x(v_->dimension());
  for (std::uint64_t attempt = 0;; ++attempt)
    if (propose(i, attempt, x.data())) return x;
}

std::uint64_t GibbsBallSampler::attempts(std::uint64_t i) const {
  double x[3];
  std::uint64_t attempt = 0;
  while (!propose(i, attempt, x)) ++attempt;
  return attempt + 1;
}

// ------------------------------------------------------------- exit times

ExitTimeRecord mean_exit_time(const MultiscaleModel& v, double r, const Eigen::VectorXd& center,
                              const std::optional<Eigen::VectorXd>& start, const SdeConfig& config) {
  const int d = v.dimension();
  if (d > 3) throw InvalidInput("exit time: d <= 3");
  if (!(r > 0)) throw InvalidInput("exit time: radius must be positive");
  if (center.size() != d) throw InvalidInput("exit time: center has wrong dimension");
  if (start) {
    if (start->size() != d) throw InvalidInput("exit time: start has wrong dimension");
    if ((*start - center).norm() >= r) throw InvalidInput("exit time: start lies outside the ball");
  }
  const double dt = resolve_dt(v, config);

  ExitTimeRecord rec;
  rec.r = r;
  rec.start = start ? point_label(*start) : "gibbs-ball";
  rec.paths = config.paths;
  rec.dt = dt;

  std::optional<GibbsBallSampler> gibbs;
  if (!start) gibbs.emplace(v, center, r, config.seed);
  const detail::Stepper stepper(v, dt, config.drift_sign, config.seed);
  const double cap = config.censor_factor * r * r;
  const auto max_steps = static_cast<std::uint64_t>(std::ceil(cap / dt));
  const double r2 = r * r;
  const double* c = center.data();

  std::vector<double> tau(config.paths);
  parallel_for(config.paths, [&](std::size_t p) {
    double y[3] = {0, 0, 0}, prev[3] = {0, 0, 0};
    detail::StepState st;
    Eigen::VectorXd y0 = start ? *start : gibbs->sample(p);
    for (int a = 0; a < d; ++a) y[a] = y0[a];
    for (std::uint64_t k = 0; k < max_steps; ++k) {
      std::copy(y, y + d, prev);
      double u = 0;
      stepper.step(y, st, p, k, &u);
      double s = 0;
      for (int a = 0; a < d; ++a) s += (y[a] - c[a]) * (y[a] - c[a]);
      const double t = static_cast<double>(k) * dt;
      if (s >= r2) {
        // Linear interpolation of the radial distance inside the step.
        double s0 = 0;
        for (int a = 0; a < d; ++a) s0 += (prev[a] - c[a]) * (prev[a] - c[a]);
        const double d0 = r - std::sqrt(s0), d1 = std::sqrt(s) - r;
        tau[p] = t + dt * d0 / (d0 + d1);
        return;
      }
      if (config.bridge && u < bridge_probability(d, prev, y, c, r, dt)) {
        tau[p] = t + 0.5 * dt;
        return;
      }
    }
    tau[p] = std::numeric_limits<double>::quiet_NaN();
  });

  std::vector<double> done;
  done.reserve(tau.size());
  for (double t : tau) {
    if (std::isnan(t))
      ++rec.censored;
    else
      done.push_back(t);
  }
  if (done.size() >= 2) {
    auto s = mean_and_stderr(done);
    rec.tau_mean = s.mean;
    rec.stderr_ = s.stderr_;
  }
  const double frac = static_cast<double>(rec.censored) / static_cast<double>(config.paths);
  if (frac > config.max_censored_fraction || done.size() < 2 || !(rec.stderr_ > 0)) {
    rec.valid = false;
    rec.diagnostics = std::to_string(rec.censored) + " of " + std::to_string(config.paths) +
                      " paths censored at t = " + format_number(cap);
  }
  return rec;
}

// ---------------------------------------------------------------- fitting

ExponentFit exit_exponent_fit(const std::vector<ExitTimeRecord>& records, const std::vector<long>& scale_lengths) {
  std::vector<const ExitTimeRecord*> ok;
  for (const auto& r : records)
    if (r.valid) ok.push_back(&r);
  if (ok.size() < 3) throw InvalidInput("exponent fit: needs at least three valid records");
  for (std::size_t i = 1; i < ok.size(); ++i)
    if (!(ok[i]->r > ok[i - 1]->r)) throw InvalidInput("exponent fit: radii must increase");
  for (auto* r : ok)
    if (!(r->r > 1.0) || !(r->tau_mean > 0) || !(r->stderr_ > 0))
      throw InvalidInput("exponent fit: radii must exceed 1 and exit times must be positive");
  if (!scale_lengths.empty()) {
    const double lo = ok.front()->r, hi = ok.back()->r;
    auto inside = std::count_if(scale_lengths.begin(), scale_lengths.end(),
                                [&](long s) { return s >= lo && s <= hi; });
    if (inside < 2) throw InvalidInput("exponent fit: radii must span at least two scale lengths");
  }

  ExponentFit fit;
  std::vector<double> x, y, sig;
  for (auto* r : ok) {
    const double lr = std::log(r->r), rel = r->stderr_ / r->tau_mean;
    fit.r.push_back(r->r);
    fit.nu.push_back(std::log(r->tau_mean) / lr - 2.0);
    fit.nu_stderr.push_back(rel / lr);
    x.push_back(lr);
    y.push_back(std::log(r->tau_mean));
    sig.push_back(rel);
  }
  auto line = fit_line(x, y, sig);
  fit.nu_slope = line.slope - 2.0;
  fit.nu_slope_stderr = line.slope_stderr;
  return fit;
}

ExponentWindow exponent_window(double lambda_min, double lambda_max, long rho_min, long rho_max, double r) {
  if (!(lambda_min > 0) || lambda_max < lambda_min) throw InvalidInput("exponent window: need 0 < l_min <= l_max");
  if (rho_min < 2 || rho_max < rho_min) throw InvalidInput("exponent window: need 2 <= rho_min <= rho_max");
  if (!(r > 1)) throw InvalidInput("exponent window: r must exceed 1");
  const double slack = 2.0 / std::log(r);
  return {std::log(1.0 / lambda_max) / std::log(double(rho_max)) - slack,
          std::log(1.0 / lambda_min) / std::log(double(rho_min)) + slack};
}

CsvTable exit_table(const std::vector<ExitTimeRecord>& records) {
  CsvTable t;
  t.columns = {"r", "start", "tau_mean", "stderr", "paths", "dt", "censored"};
  for (const auto& r : records)
    t.add({format_number(r.r), r.start, format_number(r.tau_mean), format_number(r.stderr_), std::to_string(r.paths),
           format_number(r.dt), std::to_string(r.censored)});
  return t;
}

nlohmann::json exponent_summary(const ExponentFit& fit, const std::vector<ExponentWindow>& windows,
                                std::optional<double> d_w) {
  nlohmann::json pts = nlohmann::json::array(), win = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.r.size(); ++i) pts.push_back({fit.r[i], fit.nu[i]});
  for (std::size_t i = 0; i < windows.size() && i < fit.r.size(); ++i)
    win.push_back({fit.r[i], windows[i].lo, windows[i].hi});
  nlohmann::json j{{"nu_pointwise", pts}, {"nu_slope", fit.nu_slope}, {"windows", win}};
  if (d_w) j["d_w"] = *d_w;
  return j;
}

}  // namespace homog
