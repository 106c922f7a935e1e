#include "homog/field/grid_field.hpp"
#include "homog/field/measures.hpp"
#include "homog/field/multiscale_model.hpp"
#include "homog/field/potential.hpp"
#include "homog/util/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace homog;
using testing::Gen;

namespace {

Eigen::VectorXi k1(int k) {
  Eigen::VectorXi v(1);
  v << k;
  return v;
}

PotentialExpr sin1() { return PotentialExpr::sin(k1(1)); }

}  // namespace

TEST_CASE("sine evaluates analytically") {
  auto u = sin1();
  CHECK(u.value(Eigen::VectorXd::Constant(1, 0.0)) == 0.0);
  CHECK(u.value(Eigen::VectorXd::Constant(1, 0.25)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(u.gradient(Eigen::VectorXd::Constant(1, 0.0))[0] == doctest::Approx(2 * std::numbers::pi));
  auto c = PotentialExpr::constant(2, 3.5);
  CHECK(c.gradient(Eigen::Vector2d(0.1, 0.2)).norm() == 0.0);
}

TEST_CASE("figure-one potential matches a high-precision evaluation") {
  // Reference values from a 30-digit evaluation of the printed formula with
  // x -> 2 pi u, y -> 2 pi v, origin value subtracted.
  auto u = potentials::figure_one();
  Eigen::Vector2d x(0.3, 0.7);
  CHECK(u.value(x) == doctest::Approx(-0.179148939386948416).epsilon(1e-13));
  CHECK(u.origin_value() == doctest::Approx(0.0).scale(1e-15));
  Eigen::Vector2d g = u.gradient(x);
  CHECK(g[0] == doctest::Approx(-6.66882622265382749).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(5.60206889892244777).epsilon(1e-12));
  CHECK(u.frequency_bound() == Eigen::Vector2i(4, 5));
}

TEST_CASE("periodicity and gradient consistency over random trees") {
  Gen g(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = 1 + trial % 3;
    auto u = testing::random_expr(g, dim);
    for (int p = 0; p < 1000; ++p) {
      Eigen::VectorXd x(dim);
      for (int a = 0; a < dim; ++a) x[a] = g.uniform(-2, 2);
      double v = u.value(x);
      REQUIRE(std::isfinite(v));
      for (int a = 0; a < dim; ++a) {
        Eigen::VectorXd y = x;
        y[a] += 1.0;
        CHECK(std::abs(u.value(y) - v) <= 1e-12 * std::max(1.0, std::abs(v)));
      }
      if (p >= 100) continue;
      Eigen::VectorXd grad = u.gradient(x);
      const double h = 1e-6;
      for (int a = 0; a < dim; ++a) {
        Eigen::VectorXd xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        double fd = (u.value(xp) - u.value(xm)) / (2 * h);
        CHECK(std::abs(fd - grad[a]) <= 1e-6 * std::max(1.0, grad.norm()));
      }
    }
  }
}

TEST_CASE("json round trip preserves values") {
  Gen g(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 1 + trial % 2;
    auto u = testing::random_expr(g, dim).normalized();
    auto back = PotentialExpr::from_json(dim, u.to_json());
    for (int p = 0; p < 20; ++p) {
      Eigen::VectorXd x(dim);
      for (int a = 0; a < dim; ++a) x[a] = g.uniform();
      CHECK(back.value(x) == doctest::Approx(u.value(x)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("json parsing normalizes and rejects malformed trees") {
  auto j = nlohmann::json::parse(R"({"op":"add","args":[{"op":"const","value":2},{"op":"cos","freq":[1],"arg":null}]})");
  auto u = PotentialExpr::from_json(1, j);
  CHECK(u.value(Eigen::VectorXd::Zero(1)) == 0.0);
  auto raw = PotentialExpr::from_json(1, j, false);
  CHECK(raw.value(Eigen::VectorXd::Zero(1)) == 3.0);

  const char* bad[] = {
      R"({"op":"sin","freq":[1,2],"arg":null})",
      R"({"op":"sin","freq":[1.5],"arg":null})",
      R"({"op":"tan","freq":[1]})",
      R"({"op":"add","args":[]})",
      R"({"op":"pow","m":-1,"arg":{"op":"const","value":1}})",
      R"({"op":"const"})",
      R"({"op":"const","value":1,"extra":0})",
  };
  for (const char* b : bad) CHECK_THROWS_AS(PotentialExpr::from_json(1, nlohmann::json::parse(b)), InvalidInput);
}

TEST_CASE("scaling and translation") {
  Gen g(3);
  auto u = testing::random_expr(g, 2);
  auto s = u.scaled(3);
  Eigen::Vector2d y(0.125, 0.375);
  auto t = u.translated(y);
  for (int p = 0; p < 50; ++p) {
    Eigen::Vector2d x(g.uniform(), g.uniform());
    CHECK(s.value(x) == doctest::Approx(u.value(3 * x)).epsilon(1e-11).scale(1.0));
    CHECK(t.value(x) == doctest::Approx(u.value(x + y)).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("grid sampling") {
  auto z = sample_grid(PotentialExpr::zero(1), 8);
  CHECK(z.samples.cwiseAbs().maxCoeff() == 0.0);
  auto s = sample_grid(sin1(), 4);
  CHECK(s.samples[0] == 0.0);
  CHECK(s.samples[1] == doctest::Approx(1.0));
  CHECK(std::abs(s.samples[2]) < 1e-15);
  CHECK(s.samples[3] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(sample_grid(sin1(), 6), InvalidInput);
  CHECK_THROWS_AS(sample_grid(sin1(), 2), InvalidInput);

  auto f = potentials::figure_one();
  auto fine = sample_grid(f, 64), coarse = sample_grid(f, 32);
  CHECK((fine.decimated(2).samples - coarse.samples).cwiseAbs().maxCoeff() == 0.0);

  auto shifted = coarse.shifted({3, -5, 0});
  auto idx = coarse.shape.flatten({4, 7, 0});
  CHECK(shifted.samples[idx] == coarse.samples[coarse.shape.flatten({7, 2, 0})]);
}

TEST_CASE("grid dump round trip") {
  auto dir = std::filesystem::temp_directory_path() / "homog_grid_test";
  std::filesystem::create_directories(dir);
  auto g = sample_grid(potentials::figure_one(), 16);
  g.write((dir / "u").string());
  auto back = GridField::read((dir / "u").string());
  CHECK(back.shape == g.shape);
  CHECK(back.samples == g.samples);
  std::filesystem::remove_all(dir);
}

TEST_CASE("oscillation and Holder seminorm") {
  CHECK(oscillation(PotentialExpr::constant(1, 2.0)).value == 0.0);
  CHECK(oscillation(sin1()).value == doctest::Approx(2.0).epsilon(1e-3 / 2));
  CHECK(oscillation(0.3 * sin1()).value == doctest::Approx(0.6).epsilon(1e-3));
  CHECK(holder_seminorm(PotentialExpr::constant(1, 1.0), 0.5).value == 0.0);
  double lip = holder_seminorm(sin1(), 1.0).value;
  CHECK(lip == doctest::Approx(2 * std::numbers::pi).epsilon(0.01));
  CHECK(holder_seminorm(2.5 * sin1(), 1.0).value == doctest::Approx(2.5 * lip).epsilon(1e-9));
}

TEST_CASE("oscillation is bounded by the Holder seminorm times the torus radius") {
  // Any two torus points are joined by m = ceil(sqrt d) segments of length
  // <= 1/2, so Osc <= m^(1-alpha) K_alpha (sqrt(d)/2)^alpha.
  Gen g(5);
  for (int trial = 0; trial < 12; ++trial) {
    const int dim = 1 + trial % 2;
    const double alpha = trial % 3 == 0 ? 1.0 : g.uniform(0.3, 1.0);
    auto u = testing::random_trig_poly(g, dim, 3, 3, 1.0);
    double osc = oscillation(u).value;
    double k = holder_seminorm(u, alpha).value;
    double m = std::ceil(std::sqrt(double(dim)));
    CHECK(osc <= std::pow(m, 1 - alpha) * k * std::pow(std::sqrt(double(dim)) / 2, alpha) + 1e-3);
  }
}

TEST_CASE("multiscale evaluation") {
  auto u = potentials::exceptional_ratio(1.0);
  auto model = MultiscaleModel::self_similar(u, 81, 3);
  CHECK(model.period(3) == 81 * 81 * 81);
  Gen g(13);
  for (int p = 0; p < 100; ++p) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, g.uniform(-5, 5));
    // Telescoping: sum_k [sin(2 pi x / 81^k) - sin(2 pi 81 x / 81^k)].
    const double tp = 2 * std::numbers::pi;
    double expect = std::sin(tp * x[0] / std::pow(81.0, 3)) - std::sin(tp * 81 * x[0]);
    CHECK(std::abs(model.evaluate(0, 3, x) - expect) <= 1e-12);
    CHECK(model.evaluate(0, 0, x) == doctest::Approx(u.value(x)));
  }
  CHECK(model.evaluate(0, 3, Eigen::VectorXd::Zero(1)) == 0.0);

  auto f = MultiscaleModel::self_similar(potentials::figure_one(), 4, 2);
  for (int p = 0; p < 50; ++p) {
    Eigen::Vector2d x(g.uniform(-20, 20), g.uniform(-20, 20));
    double v = f.evaluate(0, 2, x);
    CHECK(std::abs(f.evaluate(0, 2, Eigen::Vector2d(x + Eigen::Vector2d(16, 0))) - v) <= 1e-11);
    CHECK(std::abs(f.evaluate(0, 2, Eigen::Vector2d(x + Eigen::Vector2d(0, 16))) - v) <= 1e-11);
    Eigen::Vector2d unit = x / 16.0;
    CHECK(f.unit_torus_potential(2).value(unit) == doctest::Approx(v).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("multiscale model json") {
  auto j = nlohmann::json::parse(R"({"d":1,"alpha":1,"scales":[
      {"U":{"op":"sin","freq":[1],"arg":null}},
      {"U":{"op":"sin","freq":[1],"arg":null},"r":4},
      {"U":{"op":"sin","freq":[1],"arg":null},"r":3}]})");
  auto m = MultiscaleModel::from_json(j);
  CHECK(m.period(2) == 12);
  CHECK(m.rho_min() == 3);
  CHECK(m.rho_max() == 4);
  CHECK(m.k0() == doctest::Approx(2.0).epsilon(1e-3));
  auto back = MultiscaleModel::from_json(m.to_json());
  CHECK(back.period(2) == 12);

  j["scales"][1]["r"] = 1;
  CHECK_THROWS_AS(MultiscaleModel::from_json(j), InvalidInput);
  j["scales"][1]["r"] = 4;
  j["bogus"] = 1;
  CHECK_THROWS_AS(MultiscaleModel::from_json(j), InvalidInput);
}
