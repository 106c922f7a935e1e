#include "homog/cell/corrector.hpp"
#include "homog/cell/duality.hpp"
#include "homog/cell/operator.hpp"
#include "homog/field/grid_field.hpp"
#include "homog/field/measures.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/stats.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace homog;
using testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXi kv(std::initializer_list<int> k) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(k.size()));
  int i = 0;
  for (int x : k) v[i++] = x;
  return v;
}

// Independent oracle: mean of e^{2U} and e^{-2U} by a 2^20-point periodic
// trapezoid rule evaluated straight from the expression.
std::pair<double, double> partition_1d(const PotentialExpr& u) {
  const int n = 1 << 20;
  double p = 0, m = 0;
  for (int j = 0; j < n; ++j) {
    double x = double(j) / n;
    double v = u(std::span<const double>(&x, 1));
    p += std::exp(2 * v);
    m += std::exp(-2 * v);
  }
  return {p / n, m / n};
}

double harmonic_oracle(const PotentialExpr& u) {
  auto [p, m] = partition_1d(u);
  return 1.0 / (p * m);
}

SolverConfig at(int n, Discretization disc = Discretization::FiniteVolume) {
  SolverConfig c;
  c.resolution = n;
  c.discretization = disc;
  return c;
}

// Symmetric form bound check: a <= b + tol as quadratic forms.
bool form_leq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b - a);
  return es.eigenvalues().minCoeff() >= -tol;
}

const Eigen::Matrix2d kRot = (Eigen::Matrix2d() << 0, -1, 1, 0).finished();

}  // namespace

TEST_CASE("zero potential gives the identity in every dimension") {
  for (int d = 1; d <= 3; ++d) {
    auto t = effective_diffusivity(PotentialExpr::zero(d), at(d == 3 ? 8 : 16));
    CHECK((t.matrix - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-12);
    CHECK(t.iterations == 0);
  }
  CHECK(voigt_reiss(PotentialExpr::zero(2)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(voigt_reiss(PotentialExpr::constant(2, 3.0)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("one-dimensional diffusivity equals the harmonic-mean oracle") {
  auto u = potentials::sine(1, 0, 1);
  double oracle = harmonic_oracle(u);
  CHECK(oracle == doctest::Approx(1.0 / std::pow(std::cyl_bessel_i(0.0, 2.0), 2)).epsilon(1e-12));
  for (auto disc : {Discretization::FiniteVolume, Discretization::Spectral}) {
    auto t = effective_diffusivity(u, at(4096, disc));
    CHECK(testing::rel_err(t.matrix(0, 0), oracle) < 1e-6);
  }
  CHECK(testing::rel_err(voigt_reiss(u), oracle) < 1e-10);

  Gen g(11);
  for (int trial = 0; trial < 4; ++trial) {
    auto p = testing::random_trig_poly(g, 1, 4, 8, 0.6);
    double o = harmonic_oracle(p);
    CHECK(testing::rel_err(effective_diffusivity(p, at(4096)).matrix(0, 0), o) < 1e-6);
    CHECK(testing::rel_err(voigt_reiss(p), o) < 1e-9);
  }
}

TEST_CASE("one-dimensional corrector matches the integrated closed form") {
  // chi'(x) = 1 - e^{2U} / mean(e^{2U}); integrate with Simpson on a 16x finer grid.
  auto u = potentials::sine(1, 0, 1);
  const int n = 4096, fine = 16;
  CorrectorSolution sol;
  effective_diffusivity(sample_grid(u, n), at(n), &sol);
  double z = partition_1d(u).first;
  auto dchi = [&](double x) { return 1.0 - std::exp(2 * std::sin(2 * kPi * x)) / z; };
  Eigen::VectorXd ref(n);
  ref[0] = 0;
  const double h = 1.0 / (n * fine);
  for (int j = 1; j < n; ++j) {
    double s = 0, a = double(j - 1) / n;
    for (int i = 0; i < fine; i += 2) {
      double x = a + i * h;
      s += h / 3 * (dchi(x) + 4 * dchi(x + h) + dchi(x + 2 * h));
    }
    ref[j] = ref[j - 1] + s;
  }
  ref.array() -= ref.mean();
  CHECK(std::abs(sol.chi[0].mean()) < 1e-12);
  CHECK((sol.chi[0].samples - ref).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(sol.residuals[0] <= 1e-9);
}

TEST_CASE("separable two-dimensional potential reduces to the 1-d value") {
  auto u = potentials::sine(2, 0, 1);
  const double d1 = 1.0 / std::pow(std::cyl_bessel_i(0.0, 2.0), 2);
  for (auto disc : {Discretization::FiniteVolume, Discretization::Spectral}) {
    CorrectorSolution sol;
    auto t = effective_diffusivity(sample_grid(u, 512), at(512, disc), &sol);
    CHECK(std::abs(t.matrix(0, 0) - d1) < 1e-4);
    CHECK(std::abs(t.matrix(1, 1) - 1.0) < 1e-4);
    CHECK(std::abs(t.matrix(0, 1)) < 1e-10);
    CHECK(sol.chi[1].samples.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.asymmetry < 1e-8);
  }
}

TEST_CASE("two-scale diffusivity") {
  Gen g(5);
  auto t2 = testing::random_trig_poly(g, 2, 3, 2, 0.4);
  auto plain = effective_diffusivity(t2, at(64));
  auto id = make_tensor(Eigen::Matrix2d::Identity());
  CHECK((two_scale_diffusivity(id, t2, at(64)).matrix - plain.matrix).norm() < 1e-12);

  auto c = make_tensor(0.37 * Eigen::Matrix2d::Identity());
  CHECK((two_scale_diffusivity(c, PotentialExpr::zero(2), at(16)).matrix - c.matrix).norm() < 1e-14);

  // d = 1: the constant inner tensor factors out.
  auto u1 = testing::random_trig_poly(g, 1, 3, 4, 0.5);
  auto t1 = testing::random_trig_poly(g, 1, 3, 3, 0.5);
  double du = harmonic_oracle(u1), dt = harmonic_oracle(t1);
  auto inner = make_tensor(Eigen::MatrixXd::Constant(1, 1, du));
  CHECK(testing::rel_err(two_scale_diffusivity(inner, t1, at(4096)).matrix(0, 0), du * dt) < 1e-8);

  // A full (non-diagonally dominant) inner tensor needs the spectral form.
  Eigen::Matrix2d a;
  a << 1.0, 1.2, 1.2, 2.0;
  CHECK_THROWS_AS(two_scale_diffusivity(make_tensor(a), t2, at(64)), InvalidInput);
  auto s = two_scale_diffusivity(make_tensor(a), t2, at(64, Discretization::Spectral));
  CHECK(form_leq(s.matrix, a, 1e-10));
}

TEST_CASE("dual diffusivity") {
  auto q0 = dual_diffusivity(PotentialExpr::zero(2), at(32));
  CHECK((q0.matrix - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  auto d0 = effective_diffusivity(PotentialExpr::zero(2), at(32, Discretization::Spectral));
  CHECK((d0.matrix - Eigen::Matrix2d::Identity()).norm() < 1e-12);

  const double d1 = 1.0 / std::pow(std::cyl_bessel_i(0.0, 2.0), 2);
  auto q = dual_diffusivity(potentials::sine(2, 0, 1), at(256));
  CHECK(std::abs(q.matrix(0, 0) - 1.0) < 1e-4);
  CHECK(std::abs(q.matrix(1, 1) - d1) < 1e-4);

  CHECK_THROWS_AS(dual_diffusivity(potentials::sine(1, 0, 1)), InvalidInput);
}

TEST_CASE("duality identities in two dimensions") {
  Gen g(21);
  for (int trial = 0; trial < 3; ++trial) {
    auto u = testing::random_trig_poly(g, 2, 4, 2, 0.5);
    auto cfg = at(128, Discretization::Spectral);
    auto d = effective_diffusivity(u, cfg);
    auto dm = effective_diffusivity(-u, cfg);
    auto q = dual_diffusivity(u, cfg);
    const double vr = 1.0 / voigt_reiss(u);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(d.eigenvalues[i] * q.eigenvalues[1 - i] * vr - 1.0) < 1e-3);
    CHECK(std::abs(d.lambda_max() * dm.lambda_min() * vr - 1.0) < 1e-3);
    CHECK((q.matrix - kRot.transpose() * dm.matrix * kRot).norm() < 1e-4);
  }
}

TEST_CASE("Voigt-Reiss sandwich on random potentials") {
  Gen g(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = trial < 3 ? 1 : 2;
    auto u = testing::random_trig_poly(g, d, g.integer(1, 4), 3, g.uniform(0.2, 1.0));
    auto t = effective_diffusivity(u);
    double vr = voigt_reiss(u);
    CHECK(t.lambda_min() >= vr - 1e-8);
    CHECK(t.lambda_max() <= 1.0 + 1e-8);
    CHECK((t.matrix - t.matrix.transpose()).norm() < 1e-10);
  }
}

TEST_CASE("finite volumes converge at second order") {
  Gen g(3);
  auto u = testing::random_trig_poly(g, 2, 3, 2, 0.5);
  auto ref = effective_diffusivity(u, at(128, Discretization::Spectral)).matrix;
  double prev = 0;
  for (int n : {16, 32, 64}) {
    double e = (effective_diffusivity(u, at(n)).matrix - ref).norm();
    if (prev > 0) CHECK(std::log2(prev / e) >= 1.9);
    prev = e;
  }
}

TEST_CASE("grid-commensurate translations leave D unchanged") {
  Gen g(8);
  auto u = testing::random_trig_poly(g, 2, 3, 2, 0.7);
  const int n = 64;
  auto base = effective_diffusivity(sample_grid(u, n), at(n));
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::Vector2d y(g.integer(0, n - 1) / double(n), g.integer(0, n - 1) / double(n));
    auto t = effective_diffusivity(u.translated(y), at(n));
    CHECK((t.matrix - base.matrix).norm() < 1e-6);
  }
}

TEST_CASE("corrector sup norm grows at most exponentially in the oscillation") {
  for (int d = 1; d <= 2; ++d) {
    auto shape = d == 1 ? PotentialExpr::sin(kv({1})) : PotentialExpr::sin(kv({1, 1})) * PotentialExpr::cos(kv({1, -1}));
    double osc1 = oscillation(shape).value;
    std::vector<double> xs, ys;
    for (double target : {0.5, 1.0, 2.0}) {
      auto u = (target / osc1) * shape;
      CorrectorSolution sol;
      effective_diffusivity(sample_grid(u, 256), at(256), &sol);
      double sup = 0;
      for (const auto& c : sol.chi) sup = std::max(sup, c.samples.cwiseAbs().maxCoeff());
      xs.push_back(target);
      ys.push_back(std::log(sup));
    }
    auto fit = fit_line(xs, ys);
    CHECK(fit.slope <= 3 * d + 2 + 0.5);
  }
}

TEST_CASE("stream tensor") {
  auto z = stream_tensor(PotentialExpr::zero(2), at(32));
  for (const auto& h : z.h) CHECK(h.cwiseAbs().maxCoeff() < 1e-14);

  auto s = stream_tensor(PotentialExpr::sin(kv({1, 1})), at(256));
  CHECK(s.skew_defect() == 0.0);
  CHECK(s.divergence_defect() <= 1e-6);

  Gen g(4);
  auto r = stream_tensor(testing::random_trig_poly(g, 2, 3, 2, 0.5), at(64));
  CHECK(r.skew_defect() == 0.0);
  CHECK(r.divergence_defect() <= 1e-6);
}

TEST_CASE("multigrid and Fourier preconditioners agree") {
  auto u = 0.5 * potentials::figure_one();
  for (auto disc : {Discretization::FiniteVolume, Discretization::Spectral}) {
    auto c = at(128, disc);
    auto fourier = effective_diffusivity(u, c);
    c.preconditioner = Preconditioner::Multigrid;
    auto mg = effective_diffusivity(u, c);
    CHECK((fourier.matrix - mg.matrix).norm() < 1e-8);
    CHECK(mg.iterations <= fourier.iterations);
  }
}

TEST_CASE("tensor JSON round trip and form bounds") {
  auto t = effective_diffusivity(0.5 * potentials::figure_one(), at(64));
  auto back = EffectiveTensor::from_json(t.to_json());
  CHECK((back.matrix - t.matrix).norm() == 0.0);
  CHECK(back.resolution == 64);

  Eigen::Matrix2d a, b;
  a << 2, 0.5, 0.5, 1;
  b = Eigen::Matrix2d::Identity();
  auto fb = form_bounds(a, b);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
  CHECK(fb.lower == doctest::Approx(es.eigenvalues()[0]));
  CHECK(fb.upper == doctest::Approx(es.eigenvalues()[1]));
  CHECK(form_leq(fb.lower * b, a, 1e-12));
  CHECK(form_leq(a, fb.upper * b, 1e-12));
}

TEST_CASE("solver rejects bad input and reports failures") {
  SolverConfig c;
  c.tolerance = 1e-3;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.max_iterations = 50;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.resolution = 48;
  CHECK_THROWS_AS(c.validate(), InvalidInput);

  CHECK_THROWS_AS(effective_diffusivity(PotentialExpr::sin(kv({40})), at(64)), BudgetError);
  SolverConfig big;
  big.resolution = 8192;
  CHECK_THROWS_AS(effective_diffusivity(potentials::sine(2, 0, 1), big), BudgetError);

  GridField w(GridShape{1, 16}, Eigen::VectorXd::Ones(16));
  w.samples[3] = 0.0;
  CHECK_THROWS_AS(CellOperator::create(w, {}, Discretization::FiniteVolume), InvalidInput);

  // A high-contrast problem cannot converge in 100 plain iterations.
  SolverConfig tight = at(256);
  tight.max_iterations = 100;
  try {
    effective_diffusivity(3.0 * potentials::figure_one(), tight);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.residual_history().size() == 101);
    CHECK(e.residual_history().back() > tight.tolerance);
  }
}
