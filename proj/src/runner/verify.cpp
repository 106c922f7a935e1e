#include "homog/runner/verify.hpp"

#include "homog/analysis/decay.hpp"
#include "homog/analysis/quadrature.hpp"
#include "homog/analysis/two_scale.hpp"
#include "homog/cell/duality.hpp"
#include "homog/ergodic/pressure.hpp"
#include "homog/runner/run.hpp"
#include "homog/sde/oracles.hpp"
#include "homog/sde/tail.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/stats.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace homog {

namespace {

using json = nlohmann::json;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Check {
  bool pass = true;
  std::string measured;
  std::string expected;

  void require(bool ok) { pass = pass && ok; }
  void note(const std::string& m) { measured += (measured.empty() ? "" : "; ") + m; }
};

SolverConfig at(int n, Discretization disc = Discretization::FiniteVolume) {
  SolverConfig c;
  c.resolution = n;
  c.discretization = disc;
  return c;
}

Eigen::VectorXi kv(int a, int b) {
  Eigen::VectorXi v(2);
  v << a, b;
  return v;
}

// Smooth two-dimensional pair shared by the two-scale and translation checks.
PotentialExpr fast_scale() {
  return (0.5 * (PotentialExpr::sin(kv(1, 0)) * PotentialExpr::cos(kv(0, 1))) + 0.2 * PotentialExpr::cos(kv(1, 1)))
      .normalized();
}

PotentialExpr slow_scale() {
  return (0.3 * PotentialExpr::cos(kv(1, 0)) + 0.3 * PotentialExpr::sin(kv(0, 1), PotentialExpr::constant(2, 0.7)) +
          0.25 * PotentialExpr::cos(kv(1, 1)) * PotentialExpr::sin(kv(1, 0)))
      .normalized();
}

MultiscaleModel battery() { return MultiscaleModel::self_similar(potentials::sine(1, 0, 1, 0.5), 4, 2); }

double tail_slope(const std::vector<double>& ln_d) {
  // Least squares over the last half of the levels (at least three points).
  const int n_max = static_cast<int>(ln_d.size()) - 1;
  const int first = std::min(n_max - 2, (n_max + 1) / 2);
  std::vector<double> x, y;
  for (int n = first; n <= n_max; ++n) {
    x.push_back(n);
    y.push_back(ln_d[n]);
  }
  return fit_line(x, y).slope;
}

std::vector<double> ln_d_1d(const PotentialExpr& u, long rho, int n_max) {
  auto m = MultiscaleModel::self_similar(u, rho, n_max);
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n) out.push_back(std::log(harmonic_diffusivity_1d(m.unit_torus_potential(n)).value));
  return out;
}

double normal_quantile(double p) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SdeConfig sde(double drift_sign, std::size_t paths, std::uint64_t seed) {
  SdeConfig c;
  c.paths = paths;
  c.seed = seed;
  c.drift_sign = drift_sign;
  return c;
}

// Exit records of the sub-diffusion battery from Gibbs starts.
ExitTimeRecord battery_exit(double r, double drift_sign) {
  SdeConfig c = sde(drift_sign, 10000, 20240610);
  c.c1 = 0.2;  // dt = 0.01 for this model
  return mean_exit_time(battery(), r, Eigen::VectorXd::Zero(1), std::nullopt, c);
}

// --- criteria -------------------------------------------------------------

Check c1_oracle_1d() {
  Check c;
  c.expected = "relative error <= 1e-6 at N = 4096, < 1 s each";
  double worst = 0, slowest = 0;
  const double oscs[] = {0.5, 1.0, 1.5, 2.0, 1.75};
  for (int i = 0; i < 5; ++i) {
    auto u = potentials::random_trig(1, 4, 8, oscs[i], 1000 + i);
    const auto t0 = std::chrono::steady_clock::now();
    const double d = effective_diffusivity(u, at(4096)).matrix(0, 0);
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const double exact = harmonic_diffusivity_1d(u, 1e-13).value;
    worst = std::max(worst, std::abs(d - exact) / exact);
  }
  c.require(worst <= 1e-6 && slowest < 1.0);
  c.note(fmt("max rel error %.2e, slowest %.3f s", worst, slowest));
  return c;
}

Check c2_separable() {
  Check c;
  c.expected = "|D - diag(1/I0(2)^2, 1)| <= 1e-4 at N = 512";
  auto t = effective_diffusivity(potentials::sine(2, 0, 1), at(512));
  Eigen::Matrix2d want = Eigen::Vector2d(1.0 / std::pow(std::cyl_bessel_i(0.0, 2.0), 2), 1.0).asDiagonal();
  const double err = (t.matrix - want).cwiseAbs().maxCoeff();
  c.require(err <= 1e-4);
  c.note(fmt("D = [[%.8f, %.1e], [%.1e, %.8f]], max entry error %.2e", t.matrix(0, 0), t.matrix(0, 1), t.matrix(1, 0),
             t.matrix(1, 1), err));
  return c;
}

Check c3_sandwich() {
  Check c;
  c.expected = "VR <= lambda_min and lambda_max <= 1 within 1e-8 on 20 potentials";
  double worst_low = -1e300, worst_high = -1e300;
  for (int i = 0; i < 20; ++i) {
    auto u = potentials::random_trig(2, 4, 3, 0.5 + 0.075 * i, 2000 + i);
    auto t = effective_diffusivity(u);
    worst_low = std::max(worst_low, voigt_reiss(u) - t.lambda_min());
    worst_high = std::max(worst_high, t.lambda_max() - 1.0);
  }
  c.require(worst_low <= 1e-8 && worst_high <= 1e-8);
  c.note(fmt("max(VR - lambda_min) = %.2e, max(lambda_max - 1) = %.2e", worst_low, worst_high));
  return c;
}

Check c4_duality() {
  Check c;
  c.expected = "|lambda_i(D) lambda_i(Q) / VR - 1| <= 1e-3 and |Q - P^T D(-U) P|_F <= 1e-4 at N = 256";
  const Eigen::Matrix2d rot = (Eigen::Matrix2d() << 0, -1, 1, 0).finished();
  double worst_product = 0, worst_q = 0;
  for (int i = 0; i < 5; ++i) {
    auto u = potentials::random_trig(2, 4, 3, 0.6 + 0.3 * i, 3000 + i);
    auto cfg = at(256, Discretization::Spectral);
    auto d = effective_diffusivity(u, cfg);
    auto dm = effective_diffusivity(-u, cfg);
    auto q = dual_diffusivity(u, cfg);
    const double inv_vr = 1.0 / voigt_reiss(u);
    // Eigenvalues paired along common eigenvectors: D ascending, Q descending.
    for (int k = 0; k < 2; ++k)
      worst_product = std::max(worst_product, std::abs(d.eigenvalues[k] * q.eigenvalues[1 - k] * inv_vr - 1.0));
    worst_q = std::max(worst_q, (q.matrix - rot.transpose() * dm.matrix * rot).norm());
  }
  c.require(worst_product <= 1e-3 && worst_q <= 1e-4);
  c.note(fmt("max product defect %.2e, max |Q - P^T D(-U) P|_F %.2e", worst_product, worst_q));
  return c;
}

Check c5_two_scale() {
  Check c;
  c.expected = "e(R) strictly decreasing over R = 2, 4, 8, 16 and e(16) <= e(2) / 2";
  SolverConfig cfg;
  cfg.discretization = Discretization::Spectral;
  auto s = two_scale_convergence_study(fast_scale(), slow_scale(), {2, 4, 8, 16}, cfg);
  std::string es;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    es += fmt("%se(%ld) = %.3e", i ? ", " : "", s.rows[i].ratio, s.rows[i].e);
    if (i) c.require(s.rows[i].e < s.rows[i - 1].e);
  }
  c.require(s.rows.back().e <= s.rows.front().e / 2);
  c.note(es);
  return c;
}

Check c6_multiscale_decay() {
  Check c;
  c.expected = "ln lambda_max strictly decreasing (rho = 4, n <= 3); eps_hat(n) <= 2 eps_hat(1); "
               "max eps_hat(rho = 8) < max eps_hat(rho = 4) over n <= 2";
  SolverConfig cfg;
  cfg.discretization = Discretization::Spectral;
  cfg.preconditioner = Preconditioner::Multigrid;
  cfg.points_per_oscillation = 6;
  auto s4 = decay_scan(MultiscaleModel::self_similar(potentials::figure_one(), 4, 3), 3, cfg);
  auto a4 = sandwich_audit(s4.records, s4.scale_tensors);
  auto s8 = decay_scan(MultiscaleModel::self_similar(potentials::figure_one(), 8, 2), 2, cfg);
  auto a8 = sandwich_audit(s8.records, s8.scale_tensors);

  std::string lm, e4, e8;
  for (std::size_t n = 0; n < s4.records.size(); ++n) {
    const double l = std::log(s4.records[n].tensor.lambda_max());
    lm += fmt("%s%.5f", n ? ", " : "", l);
    if (n) c.require(l < std::log(s4.records[n - 1].tensor.lambda_max()));
    e4 += fmt("%s%.4f", n ? ", " : "", a4.eps_hat[n]);
    if (n >= 1) c.require(a4.eps_hat[n] <= 2 * a4.eps_hat[1]);
  }
  for (std::size_t n = 0; n < a8.eps_hat.size(); ++n) e8 += fmt("%s%.4f", n ? ", " : "", a8.eps_hat[n]);
  const double m4 = std::max(a4.eps_hat[1], a4.eps_hat[2]), m8 = std::max(a8.eps_hat[1], a8.eps_hat[2]);
  c.require(m8 < m4);
  c.note("ln lambda_max(rho=4) = [" + lm + "]");
  c.note("eps_hat(rho=4) = [" + e4 + "], eps_hat(rho=8) = [" + e8 + "]");
  return c;
}

Check c7_exceptional() {
  Check c;
  c.expected = "slope(rho=3) >= -0.1 |slope(rho=4)|, slope(rho=4) <= -0.2; Z(81) zero, Z(2) < -3 sigma; "
               "cocycle agrees";
  auto u = potentials::exceptional_ratio(0.5);
  const double s3 = tail_slope(ln_d_1d(u, 3, 6)), s4 = tail_slope(ln_d_1d(u, 4, 5));
  c.require(s3 >= -0.1 * std::abs(s4));
  c.require(s4 <= -0.2);
  auto z81 = z_functional(u, 81), z2 = z_functional(u, 2);
  auto c81 = cocycle_criterion(u, 81, max_feasible_n(u, 81, {}, 4));
  auto c2 = cocycle_criterion(u, 2, 12);
  c.require(z81.classification == "zero" && std::abs(z81.z) <= 3 * z81.sigma + ZConfig{}.abs_tolerance);
  c.require(z2.z < -3 * z2.sigma);
  c.require(!c81.positive && c2.positive);
  c.note(fmt("slope(rho=3) = %.4f, slope(rho=4) = %.4f", s3, s4));
  c.note(fmt("Z(81) = %.2e +- %.1e (%s), Z(2) = %.4f +- %.1e", z81.z, z81.sigma, z81.classification.c_str(), z2.z,
             z2.sigma));
  c.note(fmt("cocycle limsup(81) = %.2e, limsup(2) = %.3f (threshold %.3f)", c81.limsup, c2.limsup, c2.threshold));
  return c;
}

Check c8_rate_identity() {
  Check c;
  c.expected = "slope of ln D(V_0^n), n <= 10, within 10% of Z (sin, rho = 2)";
  auto u = potentials::sine(1, 0, 1);
  const double slope = tail_slope(ln_d_1d(u, 2, 10));
  auto z = z_functional(u, 2);
  const double rel = std::abs(slope - z.z) / std::abs(z.z);
  c.require(rel <= 0.1);
  c.note(fmt("slope %.5f, Z %.5f, relative difference %.3f", slope, z.z, rel));
  return c;
}

Check c9_exit_baselines(double drift_sign) {
  Check c;
  c.expected = "V = 0: tau(1) = 1 (d=1), 0.5 (d=2) within 3 se; multiscale within 3 se + 2% of the oracle";
  SdeConfig free = sde(drift_sign, 10000, 7);
  free.dt = 1e-3;
  auto one = mean_exit_time(MultiscaleModel({PotentialExpr::zero(1)}, {}), 1.0, Eigen::VectorXd::Zero(1),
                            Eigen::VectorXd::Zero(1), free);
  auto two = mean_exit_time(MultiscaleModel({PotentialExpr::zero(2)}, {}), 1.0, Eigen::VectorXd::Zero(2),
                            Eigen::VectorXd::Zero(2), free);
  c.require(std::abs(one.tau_mean - 1.0) <= 3 * one.stderr_);
  c.require(std::abs(two.tau_mean - 0.5) <= 3 * two.stderr_);
  // Off-centre start: the oracle is not symmetric under V -> -V there.
  auto v = battery();
  auto ms = mean_exit_time(v, 4.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0), sde(drift_sign, 10000, 8));
  const double exact = exact_exit_time_1d(v, -4, 4, 2.0);
  c.require(ms.valid && one.valid && two.valid);
  c.require(std::abs(ms.tau_mean - exact) <= 3 * ms.stderr_ + 0.02 * exact);
  c.note(fmt("d=1 %.4f +- %.4f, d=2 %.4f +- %.4f", one.tau_mean, one.stderr_, two.tau_mean, two.stderr_));
  c.note(fmt("multiscale r=4 x=2: %.3f +- %.3f vs exact %.3f (dt %.2e)", ms.tau_mean, ms.stderr_, exact, ms.dt));
  return c;
}

Check c10_subdiffusivity(double drift_sign) {
  Check c;
  c.expected = "nu(64) > 0.1 + 3 se; nu(r) inside the exponent window; <= 30 min";
  const auto t0 = std::chrono::steady_clock::now();
  auto v = battery();
  std::vector<ExitTimeRecord> recs;
  for (double r : {4.0, 16.0, 64.0}) recs.push_back(battery_exit(r, drift_sign));
  auto fit = exit_exponent_fit(recs, {1, 4, 16});
  const double lambda = harmonic_diffusivity_1d(v.scale(0)).value;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(fit.nu[2] - 3 * fit.nu_stderr[2] > 0.1);
  std::string nus;
  for (std::size_t i = 0; i < fit.r.size(); ++i) {
    auto w = exponent_window(lambda, lambda, 4, 4, fit.r[i]);
    c.require(w.contains(fit.nu[i]));
    const double exact = gibbs_exit_time_1d(v, 0.0, fit.r[i]);
    nus += fmt("%snu(%g) = %.4f +- %.4f in [%.3f, %.3f] (tau %.1f, oracle %.1f)", i ? ", " : "", fit.r[i], fit.nu[i],
               fit.nu_stderr[i], w.lo, w.hi, recs[i].tau_mean, exact);
  }
  c.require(seconds <= 1800);
  c.note(nus);
  c.note(fmt("nu_slope %.3f, %.0f s", fit.nu_slope, seconds));
  return c;
}

Check c11_identities() {
  Check c;
  c.expected = "ergodicity residual <= 1e-4 at N = 4096, each N -> 2N cuts it by >= 3.5, order >= 2 (2 s.f.); H skew to round-off, divergence <= 1e-6; "
               "Green monotone on 20 probes; translation within bound at R = 8";
  Eigen::VectorXd l = Eigen::VectorXd::Ones(1);
  auto s = potentials::sine(1, 0, 1);
  // Second order: every doubling from N = 512 cuts the residual by at least
  // 3.5, and the least-squares order over the four grids is 2 to two figures.
  std::vector<double> lx, ly;
  double fine = 0, coarse = 0, worst_factor = 1e300;
  for (int n = 512; n <= 4096; n *= 2) {
    const double r = ergodicity_check(s, l, n).residual;
    if (fine > 0) worst_factor = std::min(worst_factor, fine / r);
    lx.push_back(std::log2(n));
    ly.push_back(std::log2(r));
    coarse = fine;
    fine = r;
  }
  const double order = -fit_line(lx, ly).slope;
  c.require(fine <= 1e-4 && worst_factor >= 3.5 && order >= 1.95);

  double skew = 0, div = 0;
  for (int i = 0; i < 2; ++i) {
    auto u = i == 0 ? PotentialExpr::sin(kv(1, 1)) : potentials::random_trig(2, 3, 2, 1.0, 4000);
    auto st = stream_tensor(u, at(256));
    skew = std::max(skew, st.skew_defect());
    div = std::max(div, st.divergence_defect());
  }
  c.require(skew <= 1e-13 && div <= 1e-6);

  auto green = green_monotonicity_check(potentials::random_trig(2, 4, 3, 1.2, 4001),
                                        potentials::random_trig(2, 3, 3, 0.8, 4002), 64, 20, 4003);
  c.require(green.hypothesis_holds && green.all_hold && green.ratios.size() == 20);
  const double worst_ratio = *std::max_element(green.ratios.begin(), green.ratios.end());

  SolverConfig cfg;
  cfg.discretization = Discretization::Spectral;
  std::vector<Eigen::VectorXd> ys = {Eigen::Vector2d(0, 0), Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.5, 0.125),
                                     Eigen::Vector2d(0.75, 0.375)};
  auto tr = translation_audit(fast_scale(), slow_scale(), 8, ys, 1.0, cfg);
  c.require(tr.within_bound);

  c.note(fmt("ergodicity residual %.2e (N=4096), %.2e (N=2048), order %.4f, min refinement factor %.3f", fine, coarse, order, worst_factor));
  c.note(fmt("skew %.1e, divergence %.1e", skew, div));
  c.note(fmt("Green lambda %.3f, max ratio/lambda %.3f", green.lambda, worst_ratio / green.lambda));
  c.note(fmt("translation max g %.2e <= bound %.3f", tr.max_g, tr.bound));
  return c;
}

Check c12_heat_tail(double drift_sign) {
  Check c;
  c.expected = "V = 0 inside simultaneous 95% intervals; multiscale d_w >= 2.05 and |d_w - (2 + nu)| <= 0.2";
  // Free motion against the Gaussian law.
  SdeConfig free = sde(drift_sign, 10000, 11);
  free.dt = 0.01;
  auto g = heat_tail(MultiscaleModel({PotentialExpr::zero(1)}, {}), Eigen::VectorXd::Zero(1), {1, 2, 4, 8, 16},
                     {1, 2, 3, 4, 6}, free);
  // Zero-hit cells still bound the probability from above.
  const std::size_t cells = g.records.size();
  std::size_t outside = 0;
  const double z = normal_quantile(1 - 0.025 / static_cast<double>(cells));
  for (const auto& r : g.records) {
    const double exact = 2 * (1 - normal_cdf(r.r / std::sqrt(r.t)));
    auto ci = wilson_interval(r.hits, r.paths, z);
    outside += exact < ci.lo || exact > ci.hi;
  }
  c.require(outside == 0);

  // nu from the exit-time lab at the middle of the tail radii.
  auto v = battery();
  auto rec16 = battery_exit(16.0, drift_sign);
  const double nu = std::log(rec16.tau_mean) / std::log(16.0) - 2.0;
  SdeConfig ms = sde(drift_sign, 4000, 12);
  ms.c1 = 0.2;
  std::vector<double> ts, rs;
  for (double t = 4; t <= 8000; t *= std::sqrt(2.0)) ts.push_back(t);
  for (double r = 4; r <= 64.01; r *= std::sqrt(2.0)) rs.push_back(r);
  TailWindow w;
  w.nu = nu;
  auto h = heat_tail(v, Eigen::VectorXd::Zero(1), ts, rs, ms, w);
  c.require(h.fit.valid && h.fit.d_w >= 2.05 && std::abs(h.fit.d_w - (2 + nu)) <= 0.2);
  c.note(fmt("V=0: %zu of %zu cells outside (z = %.2f), d_w %.3f", outside, cells, z, g.fit.d_w));
  c.note(fmt("multiscale: d_w %.3f over %zu cells, nu(16) = %.3f", h.fit.d_w, h.fit.cells, nu));
  return c;
}

Check c13_reproducibility(const std::filesystem::path& scratch) {
  Check c;
  c.expected = "re-running each manifest reproduces byte-identical outputs";
  const json configs[] = {
      {{"command", "diffusivity"}, {"seed", 1}, {"model", {{"bundled", "figure-one"}, {"n", 0}}}},
      {{"command", "scan"}, {"seed", 1}, {"model", {{"bundled", "exceptional-ratio"}, {"rho", 4}, {"n", 2}}}},
      {{"command", "exit"},
       {"seed", 5},
       {"model", {{"bundled", "battery-1d"}, {"n", 1}}},
       {"sde", {{"paths", 500}}},
       {"params", {{"radii", {1.0, 2.0, 4.0}}}}},
      {{"command", "tail"},
       {"seed", 6},
       {"model", {{"bundled", "battery-1d"}, {"n", 1}}},
       {"sde", {{"paths", 500}}},
       {"params", {{"times", {1, 2, 4, 8}}, {"radii", {1, 2, 3}}}}},
      {{"command", "pressure"},
       {"seed", 1},
       {"model", {{"bundled", "exceptional-ratio"}, {"n", 0}}},
       {"params", {{"rho", 2}, {"n_cap", 8}}}},
  };
  int k = 0, identical = 0;
  for (const auto& cfg : configs) {
    const auto first = scratch / ("run" + std::to_string(k) + "a");
    const auto second = scratch / ("run" + std::to_string(k) + "b");
    auto a = run_experiment(parse_config(cfg), first);
    auto b = run_experiment(load_config(first / "manifest.json"), second);
    bool same = a.manifest["config_hash"] == b.manifest["config_hash"] && a.manifest["outputs"] == b.manifest["outputs"];
    for (const auto& f : a.manifest["outputs"]) {
      auto read = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
      };
      const auto name = f["file"].get<std::string>();
      same = same && read(first / name) == read(second / name);
    }
    identical += same;
    ++k;
  }
  c.require(identical == k);
  c.note(fmt("%d of %d runs identical", identical, k));
  return c;
}

const char* kTitles[] = {"",
                         "1-d oracle equality",
                         "separable 2-d",
                         "sandwich inequalities",
                         "duality",
                         "two-scale convergence",
                         "multi-scale decay",
                         "exceptional ratios",
                         "1-d rate identity",
                         "exit-time baselines",
                         "sub-diffusivity",
                         "identity suite",
                         "heat-tail shape",
                         "reproducibility"};

}  // namespace

std::vector<int> tier_criteria(const std::string& tier) {
  if (tier == "full") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  if (tier == "fast") return {1, 2, 3, 4, 7, 8, 9, 11, 13};
  throw InvalidInput("verify: tier must be fast or full");
}

std::string format_result(const CriterionResult& r) {
  std::string s = "[" + r.status + "] " + std::to_string(r.id) + " " + r.title;
  if (r.status == "SKIP") return s + ": not in this tier";
  return s + ": " + r.measured + " (expected " + r.expected + ")" + fmt(" [%.1f s]", r.seconds);
}

std::vector<CriterionResult> verify_suite(const VerifyOptions& o) {
  const auto tier = tier_criteria(o.tier);
  std::vector<int> active = o.only.empty() ? tier : o.only;
  std::filesystem::path scratch = o.scratch;
  bool own_scratch = false;
  if (scratch.empty()) {
    scratch = std::filesystem::temp_directory_path() / ("homog-verify-" + std::to_string(::getpid()));
    own_scratch = true;
  }

  std::vector<CriterionResult> out;
  for (int id = 1; id <= 13; ++id) {
    CriterionResult r;
    r.id = id;
    r.title = kTitles[id];
    if (std::find(active.begin(), active.end(), id) == active.end()) {
      r.status = "SKIP";
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      Check c;
      try {
        switch (id) {
          case 1: c = c1_oracle_1d(); break;
          case 2: c = c2_separable(); break;
          case 3: c = c3_sandwich(); break;
          case 4: c = c4_duality(); break;
          case 5: c = c5_two_scale(); break;
          case 6: c = c6_multiscale_decay(); break;
          case 7: c = c7_exceptional(); break;
          case 8: c = c8_rate_identity(); break;
          case 9: c = c9_exit_baselines(o.drift_sign); break;
          case 10: c = c10_subdiffusivity(o.drift_sign); break;
          case 11: c = c11_identities(); break;
          case 12: c = c12_heat_tail(o.drift_sign); break;
          case 13: c = c13_reproducibility(scratch); break;
        }
      } catch (const std::exception& e) {
        c.pass = false;
        c.measured = std::string("error: ") + e.what();
      }
      r.status = c.pass ? "PASS" : "FAIL";
      r.measured = c.measured;
      r.expected = c.expected;
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (o.on_result) o.on_result(r);
    out.push_back(r);
  }
  if (own_scratch) std::filesystem::remove_all(scratch);
  return out;
}

}  // namespace homog
