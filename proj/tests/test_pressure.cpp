#include "homog/analysis/quadrature.hpp"
#include "homog/ergodic/pressure.hpp"
#include "homog/field/multiscale_model.hpp"
#include "homog/util/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace homog;
using testing::Gen;

namespace {

Eigen::VectorXi k1(int k) { return Eigen::VectorXi::Constant(1, k); }

// Direct evaluation of ln mean exp(sum_{k<n} U(rho^k x)) at `points` nodes,
// independent of the table-lookup walk.
double brute_log_integral(const PotentialExpr& u, long rho, int n, int points) {
  double acc = 0;
  for (int j = 0; j < points; ++j) {
    double s = 0, x = double(j) / points;
    for (int k = 0; k < n; ++k) {
      double y = std::fmod(x * std::pow(double(rho), k), 1.0);
      s += u(std::span<const double>(&y, 1));
    }
    acc += std::exp(s);
  }
  return std::log(acc / points);
}

}  // namespace

TEST_CASE("Birkhoff integrals of trivial potentials") {
  for (int n = 0; n <= 5; ++n) {
    CHECK(birkhoff_log_integral(PotentialExpr::zero(1), 3, n).log_integral == 0.0);
    CHECK(birkhoff_log_integral(PotentialExpr::constant(1, 0.7), 3, n).log_integral ==
          doctest::Approx(0.7 * n).epsilon(1e-14));
  }
  // U = g - g o s_2 with g = sin(2 pi x): the Birkhoff sum telescopes.
  auto cob = PotentialExpr::sin(k1(1)) - PotentialExpr::sin(k1(2));
  for (int n = 1; n <= 12; ++n) CHECK(std::abs(birkhoff_log_integral(cob, 2, n).log_integral) <= 2.0);
}

TEST_CASE("Birkhoff integral agrees with direct evaluation") {
  Gen g(6);
  for (int trial = 0; trial < 3; ++trial) {
    auto u = testing::random_trig_poly(g, 1, 3, 3, 0.8);
    const long rho = g.integer(2, 4);
    for (int n = 1; n <= 3; ++n) {
      auto b = birkhoff_log_integral(u, rho, n);
      CHECK(std::abs(b.log_integral - brute_log_integral(u, rho, n, 1 << 14)) < 1e-10);
    }
  }
}

TEST_CASE("two-dimensional Birkhoff integrals factor over separable potentials") {
  Eigen::VectorXi kx(2), ky(2);
  kx << 1, 0;
  ky << 0, 2;
  auto ux = 0.6 * PotentialExpr::sin(kx), uy = 0.4 * PotentialExpr::cos(ky);
  auto u1x = 0.6 * PotentialExpr::sin(k1(1)), u1y = 0.4 * PotentialExpr::cos(k1(2));
  QuadratureConfig c;
  c.q = 32;
  for (int n = 1; n <= 4; ++n) {
    double two = birkhoff_log_integral(ux + uy, 2, n, c).log_integral;
    double sum = birkhoff_log_integral(u1x, 2, n, c).log_integral + birkhoff_log_integral(u1y, 2, n, c).log_integral;
    CHECK(std::abs(two - sum) < 1e-10);
  }
}

TEST_CASE("quadrature is stable under doubling") {
  QuadratureConfig c;
  c.check_stability = true;
  auto u = potentials::exceptional_ratio(0.5);
  for (int n = 1; n <= 8; ++n) {
    auto b = birkhoff_log_integral(u, 2, n, c);
    CHECK(b.stability >= 0.0);
    CHECK(b.stability < 1e-6);
    CHECK(b.resolution >= 8 * std::pow(2.0, n - 1) * 81);
  }
}

TEST_CASE("pressure estimates") {
  CHECK(pressure_estimate(PotentialExpr::zero(1), 2, 2, 6).slope == 0.0);
  CHECK(std::abs(pressure_estimate(PotentialExpr::constant(1, -0.3), 2, 2, 6).slope + 0.3) < 1e-10);
  auto cob = PotentialExpr::sin(k1(1)) - PotentialExpr::sin(k1(2));
  auto p = pressure_estimate(cob, 2, 6, 12);
  CHECK(std::abs(p.slope) < 1e-3);
  CHECK(pressure_table(p).rows.size() == 7);
  CHECK_THROWS_AS(pressure_estimate(cob, 2, 5, 6), InvalidInput);
  CHECK_THROWS_AS(birkhoff_log_integral(cob, 2, 40), BudgetError);
  CHECK_THROWS_AS(birkhoff_log_integral(cob, 1, 3), InvalidInput);
}

TEST_CASE("Z functional and cocycle criterion") {
  auto zero = z_functional(PotentialExpr::zero(1), 2);
  CHECK(zero.z == 0.0);
  CHECK(zero.classification == "zero");
  auto c0 = cocycle_criterion(PotentialExpr::zero(1), 2, 8);
  for (double a : c0.a) CHECK(a == 0.0);
  CHECK_FALSE(c0.positive);

  auto u = potentials::exceptional_ratio(0.5);
  auto z81 = z_functional(u, 81);
  CHECK(z81.classification == "zero");
  auto c81 = cocycle_criterion(u, 81, max_feasible_n(u, 81, {}, 4));
  CHECK_FALSE(c81.positive);
  // Telescoped sums are bounded by 2 * 0.5 * max|sin| = 1, so a_n <= 1 / n.
  for (std::size_t n = 1; n <= c81.a.size(); ++n) CHECK(c81.a[n - 1] <= 1.0 / n + 1e-9);

  auto z2 = z_functional(u, 2);
  CHECK(z2.classification == "negative");
  CHECK(z2.z < -3 * z2.sigma);
  auto c2 = cocycle_criterion(u, 2, 12);
  CHECK(c2.positive);
  for (int n = 6; n <= 12; ++n) CHECK(c2.a[n - 1] > c2.threshold);

  auto j = pressure_summary(z2, c2);
  for (const char* key : {"rho", "P_2U", "P_minus2U", "Z", "Z_sigma", "criterion_limsup", "classification"})
    CHECK(j.contains(key));
}

TEST_CASE("Z is never positive") {
  Gen g(17);
  ZConfig c;
  c.n_cap = 9;
  for (int trial = 0; trial < 4; ++trial) {
    auto u = testing::random_trig_poly(g, 1, 3, 3, 0.7);
    auto z = z_functional(u, g.integer(2, 3), c);
    CHECK(z.z <= 3 * z.sigma + c.abs_tolerance);
    CHECK(z.classification != "positive");
  }
}

TEST_CASE("one-dimensional decay rate matches Z") {
  auto u = potentials::sine(1, 0, 1);
  auto z = z_functional(u, 2);
  auto model = MultiscaleModel::self_similar(u, 2, 10);
  std::vector<double> ln_d;
  for (int n = 0; n <= 10; ++n) ln_d.push_back(std::log(harmonic_diffusivity_1d(model.unit_torus_potential(n)).value));
  // Tail slope over n = 5..10.
  std::vector<double> x, y;
  for (int n = 5; n <= 10; ++n) {
    x.push_back(n);
    y.push_back(ln_d[n]);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double k = double(x.size()), slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(std::abs(slope - z.z) <= 0.1 * std::abs(z.z));
}
