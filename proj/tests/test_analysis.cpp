#include "homog/analysis/decay.hpp"
#include "homog/analysis/quadrature.hpp"
#include "homog/analysis/two_scale.hpp"
#include "homog/field/measures.hpp"
#include "homog/util/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace homog;
using testing::Gen;

namespace {

Eigen::VectorXi kv(int a, int b) {
  Eigen::VectorXi v(2);
  v << a, b;
  return v;
}

// A smooth, genuinely two-dimensional pair used by the two-scale tests.
PotentialExpr fast_scale() {
  return (0.5 * (PotentialExpr::sin(kv(1, 0)) * PotentialExpr::cos(kv(0, 1))) + 0.2 * PotentialExpr::cos(kv(1, 1)))
      .normalized();
}

PotentialExpr slow_scale() {
  return (0.3 * PotentialExpr::cos(kv(1, 0)) + 0.3 * PotentialExpr::sin(kv(0, 1), PotentialExpr::constant(2, 0.7)) +
          0.25 * PotentialExpr::cos(kv(1, 1)) * PotentialExpr::sin(kv(1, 0)))
      .normalized();
}

SolverConfig spectral() {
  SolverConfig c;
  c.discretization = Discretization::Spectral;
  return c;
}

DecayRecord record(int n, double lo, double hi) {
  DecayRecord r;
  r.n = n;
  Eigen::Matrix2d m = Eigen::Vector2d(lo, hi).asDiagonal();
  r.tensor = make_tensor(m);
  return r;
}

}  // namespace

TEST_CASE("streaming 1-d quadrature") {
  auto q = harmonic_diffusivity_1d(potentials::sine(1, 0, 1));
  CHECK(q.value == doctest::Approx(1.0 / std::pow(std::cyl_bessel_i(0.0, 2.0), 2)).epsilon(1e-12));
  CHECK(q.mean_plus == doctest::Approx(std::cyl_bessel_i(0.0, 2.0)).epsilon(1e-12));
  CHECK(harmonic_diffusivity_1d(PotentialExpr::zero(1)).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(harmonic_diffusivity_1d(PotentialExpr::sin(Eigen::VectorXi::Constant(1, 1000)), 1e-10, 1024),
                  BudgetError);
  CHECK_THROWS_AS(harmonic_diffusivity_1d(potentials::sine(2, 0, 1)), InvalidInput);
}

TEST_CASE("decay scan with a single scale reproduces D(U_0)") {
  Gen g(2);
  auto u = testing::random_trig_poly(g, 2, 3, 2, 0.6);
  auto model = MultiscaleModel::self_similar(u, 4, 0);
  auto scan = decay_scan(model, 0);
  REQUIRE(scan.records.size() == 1);
  CHECK((scan.records[0].tensor.matrix - effective_diffusivity(u).matrix).norm() < 1e-12);
  CHECK(scan.rate.empty());
  auto audit = sandwich_audit(scan.records, scan.scale_tensors);
  CHECK(audit.eps_hat == std::vector<double>{0.0});
}

TEST_CASE("zero scales give the identity and no sandwich defect") {
  auto model = MultiscaleModel::self_similar(PotentialExpr::zero(2), 4, 3);
  auto scan = decay_scan(model, 3);
  for (const auto& r : scan.records) CHECK((r.tensor.matrix - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  auto audit = sandwich_audit(scan.records, scan.scale_tensors);
  CHECK(audit.max_eps == 0.0);
}

TEST_CASE("sandwich audit returns the minimal exponent") {
  // Per-scale spectrum [0.5, 0.8]; D_2 = diag(0.2, 0.7) violates the upper
  // product 0.512 by ln(0.7 / 0.512) / 2 and satisfies the lower one.
  std::vector<EffectiveTensor> scales(3, make_tensor(Eigen::Vector2d(0.5, 0.8).asDiagonal().toDenseMatrix()));
  std::vector<DecayRecord> recs = {record(0, 0.5, 0.8), record(1, 0.3, 0.6), record(2, 0.2, 0.7)};
  auto audit = sandwich_audit(recs, scales);
  CHECK(audit.eps_hat[0] == 0.0);
  CHECK(audit.eps_hat[1] == doctest::Approx(std::log(0.25 / 0.3) < 0 ? 0.0 : std::log(0.25 / 0.3)));
  CHECK(audit.eps_hat[2] == doctest::Approx(std::max(std::log(0.125 / 0.2), std::log(0.7 / 0.512)) / 2));
  CHECK(audit.max_eps == audit.eps_hat[2]);
  // With eps = eps_hat both inequalities hold; any smaller eps breaks one.
  const double e = audit.eps_hat[2];
  CHECK(std::exp(2 * e) * 0.512 >= 0.7 * (1 - 1e-14));
  CHECK(std::exp(2 * (e - 1e-6)) * 0.512 < 0.7);

  std::vector<DecayRecord> gap = {record(0, 0.5, 0.8), record(2, 0.2, 0.7)};
  CHECK_THROWS_AS(sandwich_audit(gap, scales), InvalidInput);
}

TEST_CASE("one-dimensional scans: decay at rho = 4, none at the exceptional ratio") {
  auto u = potentials::exceptional_ratio(0.5);
  auto exceptional = decay_scan(MultiscaleModel::self_similar(u, 81, 2), 2);
  // V_0^n telescopes to 0.5 (sin(2 pi x / R_n) - sin(2 pi 81 x)), oscillation <= 2.
  for (const auto& r : exceptional.records) CHECK(r.tensor.lambda_min() >= std::exp(-2.0 * 2.0));

  auto generic = decay_scan(MultiscaleModel::self_similar(u, 4, 4), 4);
  for (int n = 1; n <= 4; ++n)
    CHECK(generic.records[n].tensor.lambda_max() < generic.records[n - 1].tensor.lambda_max());
  CHECK(generic.rate.first == 3);
  CHECK(generic.rate.last == 4);
  CHECK(generic.rate.lambda_plus < -0.2);
  CHECK(generic.rate.lambda_minus == doctest::Approx(generic.rate.lambda_plus));
}

TEST_CASE("decay scan checks the budget before solving") {
  auto model = MultiscaleModel::self_similar(potentials::figure_one(), 8, 3);
  CHECK_THROWS_AS(decay_scan(model, 3), BudgetError);
  CHECK_THROWS_AS(decay_scan(model, 4), InvalidInput);
}

TEST_CASE("figure-one scan decays and is flagged outside the hypothesis") {
  SolverConfig c;
  c.preconditioner = Preconditioner::Multigrid;
  c.points_per_oscillation = 8;
  auto scan = decay_scan(MultiscaleModel::self_similar(potentials::figure_one(), 4, 1), 1, c);
  CHECK(scan.records[1].tensor.lambda_max() < scan.records[0].tensor.lambda_max());
  CHECK(scan.outside_hypothesis);
  CHECK(scan.k_alpha > 4.0);
  for (const auto& r : scan.records) CHECK(r.tensor.lambda_max() <= 1.0);
}

TEST_CASE("decay table is deterministic and optionally timed") {
  auto model = MultiscaleModel::self_similar(potentials::sine(1, 0, 1), 2, 3);
  auto a = decay_scan(model, 3), b = decay_scan(model, 3);
  auto ta = decay_table(a, sandwich_audit(a.records, a.scale_tensors));
  auto tb = decay_table(b, sandwich_audit(b.records, b.scale_tensors));
  CHECK(ta.str() == tb.str());
  CHECK(ta.columns == std::vector<std::string>{"n", "R_n", "lambda_min", "lambda_max", "ln_lambda_max", "eps_hat", "N"});
  CHECK(decay_table(a, {}, true).columns.back() == "seconds");
  CHECK(ta.rows.size() == 4);
}

TEST_CASE("two-scale study: trivial pairs") {
  auto t = slow_scale();
  auto zero_u = two_scale_convergence_study(PotentialExpr::zero(2), t, {2, 4}, spectral());
  for (const auto& r : zero_u.rows) CHECK(r.e <= 1e-8);

  auto u = fast_scale();
  auto zero_t = two_scale_convergence_study(u, PotentialExpr::zero(2), {2, 3}, spectral());
  for (const auto& r : zero_t.rows) {
    CHECK(r.e <= 1e-8);
    CHECK((r.combined.matrix - zero_t.d_u.matrix).norm() < 1e-8);
  }
  CHECK_THROWS_AS(two_scale_convergence_study(u, t, {1}, spectral()), InvalidInput);
}

TEST_CASE("two-scale study converges and satisfies the corollary bounds") {
  auto s = two_scale_convergence_study(fast_scale(), slow_scale(), {2, 4, 8, 16}, spectral());
  for (std::size_t i = 1; i < s.rows.size(); ++i) CHECK(s.rows[i].e < s.rows[i - 1].e);
  CHECK(s.rows.back().e <= s.rows.front().e / 2);
  for (const auto& r : s.rows) {
    CHECK(r.corollary_holds);
    CHECK(r.f_minus <= r.f_plus);
  }
  auto table = convergence_table(s);
  CHECK(table.columns == std::vector<std::string>{"R", "f_minus", "f_plus", "e"});
  CHECK(table.rows.size() == 4);
}

TEST_CASE("translation audit") {
  auto u = fast_scale(), t = slow_scale();
  std::vector<Eigen::VectorXd> ys = {Eigen::Vector2d(0, 0), Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.5, 0.125)};
  auto a = translation_audit(u, t, 8, ys, 1.0, spectral());
  CHECK(a.rows[0].g <= 1e-12);
  CHECK(a.within_bound);
  CHECK(a.bound == doctest::Approx(4 * a.holder_t / 8));

  auto none = translation_audit(u, PotentialExpr::zero(2), 8, ys, 1.0, spectral());
  CHECK(none.max_g <= 1e-8);

  std::vector<Eigen::VectorXd> bad = {Eigen::Vector2d(1e-3, 0)};
  CHECK_THROWS_AS(translation_audit(u, t, 8, bad, 1.0, spectral()), InvalidInput);
}
