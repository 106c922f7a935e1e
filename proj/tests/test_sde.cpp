#include "homog/sde/exit_time.hpp"
#include "homog/sde/oracles.hpp"
#include "homog/sde/random.hpp"
#include "homog/sde/stability.hpp"
#include "homog/sde/tail.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"
#include "homog/util/stats.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace homog;
using testing::Gen;

namespace {

MultiscaleModel one(const PotentialExpr& u) { return MultiscaleModel({u}, {}); }

MultiscaleModel battery() { return MultiscaleModel::self_similar(potentials::sine(1, 0, 1, 0.5), 4, 2); }

Eigen::VectorXd point(double x) { return Eigen::VectorXd::Constant(1, x); }

// Dense central-difference solve of (1/2) f'' - V' f' = -1 on (a, b), f = 0
// at both ends; returns f at x (a node).
double fd_exit_time(const PotentialExpr& v, double a, double b, double x, int n) {
  const double h = (b - a) / n;
  std::vector<double> lo(n + 1), di(n + 1), up(n + 1), rhs(n + 1);
  for (int j = 1; j < n; ++j) {
    double xj = a + j * h, g = 0;
    v.evaluate(&xj, &g);
    lo[j] = 0.5 / (h * h) + g / (2 * h);
    di[j] = -1.0 / (h * h);
    up[j] = 0.5 / (h * h) - g / (2 * h);
    rhs[j] = -1.0;
  }
  // Thomas algorithm on the interior nodes.
  for (int j = 2; j < n; ++j) {
    const double m = lo[j] / di[j - 1];
    di[j] -= m * up[j - 1];
    rhs[j] -= m * rhs[j - 1];
  }
  std::vector<double> f(n + 1, 0.0);
  for (int j = n - 1; j >= 1; --j) f[j] = (rhs[j] - (j + 1 < n ? up[j] * f[j + 1] : 0.0)) / di[j];
  return f[static_cast<int>(std::lround((x - a) / h))];
}

double chi_square(const std::vector<int>& counts, double expected) {
  double s = 0;
  for (int c : counts) s += (c - expected) * (c - expected) / expected;
  return s;
}

}  // namespace

TEST_CASE("Philox known-answer vectors") {
  auto a = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  CHECK(a == Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  auto b = Philox4x32::generate({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u});
  CHECK(b == Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  auto c = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(c == Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Box-Muller normals have unit moments") {
  const auto key = Philox4x32::key_of(99);
  double s1 = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n / 2; ++i) {
    auto w = Philox4x32::generate(StreamCounter::make(7, static_cast<std::uint64_t>(i), 0, false), key);
    for (double z : normal_pair(w[0], w[1])) {
      s1 += z;
      s2 += z * z;
      s4 += z * z * z * z;
    }
  }
  CHECK(std::abs(s1 / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(s2 / n - 1) < 4 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3) < 4 * std::sqrt(96.0 / n));
}

TEST_CASE("dt policy") {
  SdeConfig c;
  auto p = dt_policy(battery(), c);
  // |grad V| <= pi (1 + 1/4 + 1/16), attained near the origin.
  CHECK(p.gradient_bound == doctest::Approx(M_PI * (1 + 0.25 + 0.0625)).epsilon(1e-3));
  CHECK(p.wavelength == 1.0);
  CHECK(p.limit == doctest::Approx(0.01 / (p.gradient_bound * p.gradient_bound)));
  CHECK(resolve_dt(one(PotentialExpr::zero(1)), c) == 1e-3);
  c.dt = 0.1;
  CHECK_THROWS_AS(resolve_dt(battery(), c), InvalidInput);
  c.dt = 0;
  c.paths = 10;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("free exit times") {
  SdeConfig c;
  c.dt = 1e-3;
  c.paths = 10000;
  auto r1 = mean_exit_time(one(PotentialExpr::zero(1)), 1.0, point(0), point(0), c);
  CHECK(r1.valid);
  CHECK(std::abs(r1.tau_mean - 1.0) <= 3 * r1.stderr_);
  auto r2 = mean_exit_time(one(PotentialExpr::zero(2)), 1.0, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), c);
  CHECK(std::abs(r2.tau_mean - 0.5) <= 3 * r2.stderr_);
  CHECK(r2.start == "0;0");
  // Off-centre start: E_x tau = r^2 - x^2.
  auto r3 = mean_exit_time(one(PotentialExpr::zero(1)), 1.0, point(0), point(0.5), c);
  CHECK(std::abs(r3.tau_mean - 0.75) <= 3 * r3.stderr_);
  CHECK_THROWS_AS(mean_exit_time(one(PotentialExpr::zero(1)), 1.0, point(0), point(1.5), c), InvalidInput);
}

TEST_CASE("halving dt barely moves the free exit time") {
  SdeConfig c;
  c.paths = 100000;
  c.dt = 1e-3;
  auto a = mean_exit_time(one(PotentialExpr::zero(1)), 1.0, point(0), point(0), c);
  c.dt = 5e-4;
  auto b = mean_exit_time(one(PotentialExpr::zero(1)), 1.0, point(0), point(0), c);
  CHECK(std::abs(a.tau_mean - b.tau_mean) < 0.01 * b.tau_mean);
}

TEST_CASE("exit times are deterministic and schedule independent") {
  SdeConfig c;
  c.paths = 400;
  set_thread_count(1);
  auto a = mean_exit_time(battery(), 2.0, point(0), std::nullopt, c);
  set_thread_count(3);
  auto b = mean_exit_time(battery(), 2.0, point(0), std::nullopt, c);
  set_thread_count(0);
  CHECK(a.tau_mean == b.tau_mean);
  CHECK(a.stderr_ == b.stderr_);
  c.seed = 2;
  auto d = mean_exit_time(battery(), 2.0, point(0), std::nullopt, c);
  CHECK(d.tau_mean != a.tau_mean);
  CHECK(exit_table({a}).str() == exit_table({b}).str());
}

TEST_CASE("multiscale exit time matches the quadrature oracle") {
  SdeConfig c;
  c.paths = 2000;
  auto v = battery();
  auto rec = mean_exit_time(v, 2.0, point(0), point(0), c);
  const double exact = exact_exit_time_1d(v, -2, 2, 0);
  CHECK(std::abs(rec.tau_mean - exact) <= 3 * rec.stderr_ + 0.02 * exact);
  CHECK(rec.dt == doctest::Approx(resolve_dt(v, c)));
}

// A flipped drift is the process of -V, so only an off-centre start tells
// the two apart.
TEST_CASE("a mis-signed drift is detected against the oracle") {
  SdeConfig c;
  c.paths = 2000;
  c.seed = 31;
  auto v = battery();
  auto minus_v = MultiscaleModel::self_similar(-potentials::sine(1, 0, 1, 0.5), 4, 2);
  const double exact = exact_exit_time_1d(v, -2, 2, 1.25);
  const double exact_minus = exact_exit_time_1d(minus_v, -2, 2, 1.25);
  REQUIRE(std::abs(exact - exact_minus) > 0.3 * exact);

  auto good = mean_exit_time(v, 2.0, point(0), point(1.25), c);
  CHECK(std::abs(good.tau_mean - exact) <= 3 * good.stderr_ + 0.02 * exact);
  c.drift_sign = -1;
  auto bad = mean_exit_time(v, 2.0, point(0), point(1.25), c);
  CHECK(std::abs(bad.tau_mean - exact) > 3 * bad.stderr_ + 0.02 * exact);
  CHECK(std::abs(bad.tau_mean - exact_minus) <= 3 * bad.stderr_ + 0.02 * exact_minus);
}

TEST_CASE("censoring invalidates the record") {
  SdeConfig c;
  c.paths = 200;
  c.dt = 1e-3;
  c.censor_factor = 0.05;
  auto r = mean_exit_time(one(PotentialExpr::zero(1)), 1.0, point(0), point(0), c);
  CHECK_FALSE(r.valid);
  CHECK(r.censored > 2);
  CHECK(r.diagnostics.find("censored") != std::string::npos);
}

TEST_CASE("Gibbs ball sampler") {
  const int n = 20000;
  SUBCASE("uniform in d = 1 and unchanged by constants") {
    auto zero = one(PotentialExpr::zero(1)), cst = one(PotentialExpr::constant(1, 0.8));
    GibbsBallSampler s(zero, point(0), 2.0, 5);
    GibbsBallSampler t(cst, point(0), 2.0, 5);
    std::vector<int> bins(20, 0);
    for (int i = 0; i < n; ++i) {
      auto x = s.sample(i);
      CHECK(x[0] == t.sample(i)[0]);
      ++bins[std::min(19, static_cast<int>((x[0] + 2) / 4 * 20))];
    }
    // chi^2 with 19 degrees of freedom: p = 0.01 at 36.19.
    CHECK(chi_square(bins, n / 20.0) < 36.19);
  }
  SUBCASE("uniform on the disc") {
    auto zero = one(PotentialExpr::zero(2));
    GibbsBallSampler s(zero, Eigen::VectorXd::Zero(2), 1.0, 6);
    std::vector<int> radial(10, 0), angular(12, 0);
    for (int i = 0; i < n; ++i) {
      auto x = s.sample(i);
      const double r2 = x.squaredNorm();
      REQUIRE(r2 < 1.0);
      ++radial[std::min(9, static_cast<int>(r2 * 10))];
      const double ang = std::atan2(x[1], x[0]) + M_PI;
      ++angular[std::min(11, static_cast<int>(ang / (2 * M_PI) * 12))];
    }
    CHECK(chi_square(radial, n / 10.0) < 21.67);   // 9 dof
    CHECK(chi_square(angular, n / 12.0) < 24.73);  // 11 dof
  }
  SUBCASE("Gibbs identity for sin") {
    auto v = one(potentials::sine(1, 0, 1));
    GibbsBallSampler s(v, point(0), 1.0, 7);
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) {
      double x = s.sample(i)[0];
      vals.push_back(std::exp(2 * v.evaluate(0, 0, &x, nullptr)));
    }
    auto m = mean_and_stderr(vals);
    // int_{-1}^{1} e^{-2 sin(2 pi x)} dx = 2 I_0(2).
    const double expect = 2.0 / (2 * std::cyl_bessel_i(0.0, 2.0));
    CHECK(std::abs(m.mean - expect) <= 3 * m.stderr_);
    CHECK(s.floor() <= -1.0);
  }
}

TEST_CASE("exponent fit and window") {
  std::vector<ExitTimeRecord> recs;
  for (double r : {4.0, 16.0, 64.0}) {
    ExitTimeRecord e;
    e.r = r;
    e.tau_mean = r * r;
    e.stderr_ = 0.01 * r * r;
    recs.push_back(e);
  }
  auto f = exit_exponent_fit(recs);
  for (double nu : f.nu) CHECK(std::abs(nu) < 1e-12);
  CHECK(std::abs(f.nu_slope) < 1e-12);
  for (auto& e : recs) {
    e.tau_mean *= 3.7;
    e.stderr_ *= 3.7;
  }
  auto g = exit_exponent_fit(recs);
  CHECK(g.nu_slope == doctest::Approx(f.nu_slope).epsilon(1e-12));
  CHECK(g.nu[0] > f.nu[0]);
  CHECK_NOTHROW(exit_exponent_fit(recs, {1, 4, 16}));
  CHECK_THROWS_AS(exit_exponent_fit(recs, {1, 4}), InvalidInput);
  recs.pop_back();
  CHECK_THROWS_AS(exit_exponent_fit(recs), InvalidInput);

  auto w = exponent_window(0.5, 0.5, 4, 4, std::exp(2.0));
  CHECK(w.lo == doctest::Approx(std::log(2.0) / std::log(4.0) - 1));
  CHECK(w.hi == doctest::Approx(std::log(2.0) / std::log(4.0) + 1));
  CHECK(w.contains(0.5));
  auto j = exponent_summary(f, {w, w, w}, 2.1);
  for (const char* key : {"nu_pointwise", "nu_slope", "d_w", "windows"}) CHECK(j.contains(key));
  CHECK(exit_table(recs).columns ==
        std::vector<std::string>{"r", "start", "tau_mean", "stderr", "paths", "dt", "censored"});
}

TEST_CASE("exact 1-d exit times") {
  auto zero = one(PotentialExpr::zero(1));
  for (double r : {0.5, 1.0, 3.0}) CHECK(exact_exit_time_1d(zero, -r, r, 0) == doctest::Approx(r * r).epsilon(1e-10));
  Gen g(3);
  for (int i = 0; i < 5; ++i) {
    const double x = g.uniform(-0.9, 0.9);
    CHECK(exact_exit_time_1d(zero, -1, 1, x) == doctest::Approx(1 - x * x).epsilon(1e-10));
  }
  CHECK(gibbs_exit_time_1d(zero, 0.3, 2.0) == doctest::Approx(2 * 4.0 / 3).epsilon(1e-10));
  CHECK(exact_exit_time_1d(zero, -1, 1, 1.0) == 0.0);

  auto s = potentials::sine(1, 0, 1);
  const double q = exact_exit_time_1d(s, -1, 1, 0);
  CHECK(std::abs(q - fd_exit_time(s, -1, 1, 0, 100000)) <= 1e-5 * q);
  auto prof = exit_profile_1d(one(s), -1, 1, 2000);
  CHECK(prof.f[1000] == doctest::Approx(q).epsilon(1e-6));
  CHECK_THROWS_AS(exact_exit_time_1d(one(PotentialExpr::zero(2)), -1, 1, 0), InvalidInput);
}

TEST_CASE("averaged exit times are stable under bounded perturbations") {
  Gen g(11);
  for (int trial = 0; trial < 4; ++trial) {
    auto u = testing::random_trig_poly(g, 1, 3, 3, 0.6);
    auto p = testing::random_trig_poly(g, 1, 2, 5, 0.3);
    const double r = g.uniform(0.5, 2.0);
    const double base = gibbs_exit_time_1d(one(u), 0, r), pert = gibbs_exit_time_1d(one(u + p), 0, r);
    double lo = 1e300, hi = -1e300;
    for (int j = 0; j <= 20000; ++j) {
      double x = -r + 2 * r * j / 20000.0;
      double val = p.evaluate(&x, nullptr);
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
    const double bound = std::exp(2 * (hi - lo));
    CHECK(pert <= bound * base);
    CHECK(pert >= base / bound);
  }
}

TEST_CASE("grid exit times in the plane") {
  PdeExitConfig c;
  c.min_points_per_radius = 64;
  auto free = pde_exit_time(PotentialExpr::zero(2), 2.0, c);
  CHECK(free.center_value == doctest::Approx(2.0).epsilon(0.03));
  auto cst = pde_exit_time(PotentialExpr::constant(2, 0.4), 2.0, c);
  CHECK(cst.center_value == free.center_value);
  // The staircase error shrinks with the mesh.
  c.min_points_per_radius = 16;
  const double coarse = std::abs(pde_exit_time(PotentialExpr::zero(2), 2.0, c).center_value - 2.0);
  CHECK(std::abs(free.center_value - 2.0) < coarse);

  Eigen::VectorXi k(2);
  k << 1, 1;
  auto u = 0.5 * PotentialExpr::sin(Eigen::Vector2i(1, 0)) + 0.3 * PotentialExpr::cos(k);
  PdeExitConfig p;
  std::vector<double> ratios;
  for (double r : {4.0, 8.0, 16.0}) ratios.push_back(pde_exit_time(u.normalized(), r, p).ratio);
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi <= 1.25 * *lo);
  c.max_nodes = 1000;
  CHECK_THROWS_AS(pde_exit_time(PotentialExpr::zero(2), 2.0, c), BudgetError);
}

TEST_CASE("ergodicity identity") {
  Eigen::VectorXd l1 = Eigen::VectorXd::Ones(1);
  auto z = ergodicity_check(PotentialExpr::zero(1), l1, 64);
  CHECK(z.residual < 1e-10);
  CHECK(z.ldl == doctest::Approx(1.0));

  auto s = potentials::sine(1, 0, 1);
  auto fine = ergodicity_check(s, l1, 4096), coarse = ergodicity_check(s, l1, 2048);
  CHECK(fine.residual <= 1e-4);
  CHECK(coarse.residual / fine.residual >= 3.5);
  CHECK(fine.ldl == doctest::Approx(1.0 / std::pow(std::cyl_bessel_i(0.0, 2.0), 2)).epsilon(1e-6));

  Gen g(4);
  auto u = testing::random_trig_poly(g, 2, 3, 2, 0.5);
  Eigen::VectorXd l(2);
  l << 0.6, -0.8;
  auto a = ergodicity_check(u, l, 64), b = ergodicity_check(u, l, 128);
  CHECK(a.residual / b.residual >= 3.5);
  CHECK(b.rhs_mean < 1e-10);
}

TEST_CASE("Green function monotonicity") {
  Gen g(8);
  auto u = testing::random_trig_poly(g, 2, 3, 2, 0.6);
  auto same = green_monotonicity_check(u, PotentialExpr::zero(2), 24, 5);
  CHECK(same.lambda == 1.0);
  for (double r : same.ratios) CHECK(r == doctest::Approx(1.0).epsilon(1e-13));

  auto half = green_monotonicity_check(u, PotentialExpr::constant(2, 0.5 * std::log(2.0)), 24, 5);
  CHECK(half.lambda == 1.0);
  for (std::size_t i = 0; i < half.q_forms.size(); ++i)
    CHECK(half.q_forms[i] == doctest::Approx(0.5 * half.m_forms[i]).epsilon(1e-12));

  auto p = testing::random_trig_poly(g, 2, 3, 3, 0.5);
  auto rep = green_monotonicity_check(u, p, 64, 20, 3);
  CHECK(rep.hypothesis_holds);
  CHECK(rep.all_hold);
  CHECK(rep.ratios.size() == 20);
  auto one_d = green_monotonicity_check(potentials::sine(1, 0, 2), testing::random_trig_poly(g, 1, 2, 3, 0.5), 200, 10);
  CHECK(one_d.all_hold);
}

TEST_CASE("free heat tail is Gaussian") {
  SdeConfig c;
  c.dt = 0.01;
  c.paths = 20000;
  std::vector<double> ts = {1, 2, 4, 8}, rs = {1, 2, 3, 4};
  auto h = heat_tail(one(PotentialExpr::zero(1)), point(0), ts, rs, c);
  int inside = 0, total = 0;
  for (const auto& rec : h.records) {
    const double exact = 2 * (1 - normal_cdf(rec.r / std::sqrt(rec.t)));
    auto wide = wilson_interval(rec.hits, rec.paths, 4.0);
    CHECK(exact >= wide.lo);
    CHECK(exact <= wide.hi);
    inside += exact >= rec.ci_lo && exact <= rec.ci_hi;
    ++total;
  }
  CHECK(inside >= 0.8 * total);
  REQUIRE(h.fit.valid);
  CHECK(std::abs(h.fit.d_w - 2.0) <= 0.1);
  CHECK(tail_table(h.records).columns == std::vector<std::string>{"t", "r", "p_hat", "ci_lo", "ci_hi", "paths"});
  TailWindow w;
  w.nu = 0;
  CHECK(w.admits(4, 2));
  CHECK_FALSE(w.admits(5, 2));
}

TEST_CASE("stability probe") {
  StabilityConfig c;
  c.monte_carlo = false;
  auto v = battery();
  // No tail: the sandwich holds with mu = 1.
  auto p = stability_probe(v, 2, point(0.3), 3.0, c);
  CHECK(p.osc_tail == 0.0);
  CHECK(p.mu_hat == 1.0);
  CHECK(p.inf_half <= p.full);
  CHECK(p.full <= p.sup_ball * (1 + 1e-9));

  // One small extra scale: mu within the weak-stability factor.
  auto small = MultiscaleModel({potentials::sine(1, 0, 1, 0.5), potentials::sine(1, 0, 1, 0.1)}, {4});
  for (double r : {1.0, 2.0, 6.0}) {
    auto q = stability_probe(small, 0, point(0.2), r, c);
    CHECK(q.osc_tail > 0);
    CHECK(q.mu_hat <= std::exp(2 * q.osc_tail) * (1 + 1e-6));
  }
  CHECK(minimal_mu(-1.0, 0.3) == 1.0);
  const double mu = minimal_mu(2.0, 0.5);
  CHECK(std::log(mu) + 0.5 * mu == doctest::Approx(2.0).epsilon(1e-9));

  c.monte_carlo = true;
  c.sde.paths = 400;
  auto mc = stability_probe(v, 1, point(0), 2.0, c);
  CHECK(mc.full_stderr > 0);
  CHECK(mc.mu_hi >= mc.mu_hat);
  auto bat = stability_battery(v, {{0, point(0), 1.0}, {1, point(0.5), 2.0}}, c);
  CHECK(bat.points.size() == 2);
  CHECK(bat.mu_max >= 1.0);
}
