#include "homog/sde/oracles.hpp"

#include "homog/cell/operator.hpp"
#include "homog/field/grid_field.hpp"
#include "homog/sde/random.hpp"
#include "homog/util/errors.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>

namespace homog {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double wavelength(const MultiscaleModel& v) {
  double w = std::numeric_limits<double>::infinity();
  for (int k = 0; k < v.scale_count(); ++k) {
    const int f = v.scale(k).max_frequency();
    if (f > 0) w = std::min(w, static_cast<double>(v.period(k)) / f);
  }
  return w;
}

MultiscaleModel single(const PotentialExpr& u) { return MultiscaleModel({u}, {}); }

// Running nested trapezoid sums over a piecewise-uniform grid of [a, b].
// At every node: M = int e^{-2V}, S = int e^{2V}, I = int e^{2V} M,
// J1 = int S e^{-2V}, J2 = int I e^{-2V}.
struct Nested {
  double m = 0, s = 0, i = 0, j1 = 0, j2 = 0;
};

class NestedWalk {
 public:
  NestedWalk(const MultiscaleModel& v, double a, double shift) : v_(v), top_(v.scale_count() - 1), shift_(shift) {
    load(a);
  }
  // Advances to x with one trapezoid panel of width h.
  void advance(double x, double h) {
    const double pp = ep_, pm = em_, ps = acc_.s, pi = acc_.i, pmm = acc_.m;
    load(x);
    acc_.m += 0.5 * h * (pm + em_);
    acc_.s += 0.5 * h * (pp + ep_);
    acc_.i += 0.5 * h * (pp * pmm + ep_ * acc_.m);
    acc_.j1 += 0.5 * h * (ps * pm + acc_.s * em_);
    acc_.j2 += 0.5 * h * (pi * pm + acc_.i * em_);
  }
  const Nested& sums() const { return acc_; }

 private:
  void load(double x) {
    const double vx = v_.evaluate(0, top_, &x, nullptr) - shift_;
    ep_ = std::exp(2 * vx);
    em_ = std::exp(-2 * vx);
  }
  const MultiscaleModel& v_;
  int top_;
  double shift_;
  double ep_ = 0, em_ = 0;
  Nested acc_;
};

long base_panels(const MultiscaleModel& v, double length) {
  const double wl = wavelength(v);
  const double per = std::isfinite(wl) ? 16.0 / wl : 1.0;
  return std::max(64L, next_power_of_two(static_cast<long>(std::ceil(per * length))));
}

// Romberg over panel doublings of a trapezoid-type estimate whose error
// expands in even powers of h.
template <class Estimate>
double romberg(Estimate estimate, long n0, double tol) {
  std::vector<double> prev, cur;
  for (int level = 0; level < 20; ++level) {
    const long n = n0 << level;
    if (n > (1L << 25)) break;
    cur.assign(1, estimate(n));
    for (std::size_t j = 1; j <= prev.size(); ++j)
      cur.push_back(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (std::pow(4.0, double(j)) - 1));
    if (level >= 2 && std::abs(cur.back() - prev.back()) <= tol * std::abs(cur.back())) return cur.back();
    prev = cur;
  }
  if (!cur.empty() && !prev.empty() && std::abs(cur.back() - prev.back()) <= 1e3 * tol * std::abs(cur.back()))
    return cur.back();
  throw SolverError("exit oracle: Romberg extrapolation did not reach the tolerance", {});
}

}  // namespace

double exact_exit_time_1d(const MultiscaleModel& v, double a, double b, double x, double tol) {
  if (v.dimension() != 1) throw InvalidInput("exact exit time: d = 1 only");
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("exact exit time: need a < b");
  if (x < a || x > b) throw InvalidInput("exact exit time: x outside the interval");
  if (x == a || x == b) return 0.0;
  const double shift = v.evaluate(0, v.scale_count() - 1, &x, nullptr);
  const long n0 = base_panels(v, b - a);
  const long na0 = std::max(2L, std::lround(n0 * (x - a) / (b - a)));
  const long nb0 = std::max(2L, std::lround(n0 * (b - x) / (b - a)));
  auto estimate = [&](long n) {
    const long scale = n / n0, na = na0 * scale, nb = nb0 * scale;
    NestedWalk w(v, a, shift);
    const double ha = (x - a) / na, hb = (b - x) / nb;
    for (long j = 1; j <= na; ++j) w.advance(j == na ? x : a + ha * j, ha);
    const Nested at_x = w.sums();
    for (long j = 1; j <= nb; ++j) w.advance(j == nb ? b : x + hb * j, hb);
    const Nested at_b = w.sums();
    return 2.0 * (at_b.i / at_b.s * at_x.s - at_x.i);
  };
  return romberg(estimate, n0, tol);
}

double exact_exit_time_1d(const PotentialExpr& v, double a, double b, double x, double tol) {
  return exact_exit_time_1d(single(v), a, b, x, tol);
}

double gibbs_exit_time_1d(const MultiscaleModel& v, double center, double r, double tol) {
  if (v.dimension() != 1) throw InvalidInput("gibbs exit time: d = 1 only");
  if (!(r > 0)) throw InvalidInput("gibbs exit time: radius must be positive");
  const double a = center - r, b = center + r;
  const double shift = v.evaluate(0, v.scale_count() - 1, &center, nullptr);
  auto estimate = [&](long n) {
    NestedWalk w(v, a, shift);
    const double h = (b - a) / n;
    for (long j = 1; j <= n; ++j) w.advance(j == n ? b : a + h * j, h);
    const Nested& s = w.sums();
    // int f e^{-2V} / int e^{-2V} with f = 2 (C S - I), C = I(b) / S(b).
    return 2.0 * (s.i / s.s * s.j1 - s.j2) / s.m;
  };
  return romberg(estimate, base_panels(v, b - a), tol);
}

ExitProfile1d exit_profile_1d(const MultiscaleModel& v, double a, double b, long n) {
  if (v.dimension() != 1) throw InvalidInput("exit profile: d = 1 only");
  if (!(a < b) || n < 2) throw InvalidInput("exit profile: need a < b and n >= 2");
  const double mid = 0.5 * (a + b);
  const double shift = v.evaluate(0, v.scale_count() - 1, &mid, nullptr);
  auto solve = [&](long m) {
    std::vector<double> s(m + 1), i(m + 1);
    NestedWalk w(v, a, shift);
    const double h = (b - a) / m;
    for (long j = 1; j <= m; ++j) {
      w.advance(j == m ? b : a + h * j, h);
      s[j] = w.sums().s;
      i[j] = w.sums().i;
    }
    const double c = i[m] / s[m];
    std::vector<double> f(m + 1);
    for (long j = 0; j <= m; ++j) f[j] = 2.0 * (c * s[j] - i[j]);
    return f;
  };
  auto coarse = solve(n), fine = solve(2 * n);
  ExitProfile1d p;
  for (long j = 0; j <= n; ++j) {
    p.x.push_back(a + (b - a) * static_cast<double>(j) / n);
    p.f.push_back((4 * fine[2 * j] - coarse[j]) / 3);
  }
  p.f.front() = p.f.back() = 0.0;
  return p;
}

// ------------------------------------------------------------------- 2-d

PdeExitResult pde_exit_time(const MultiscaleModel& v, const Eigen::Vector2d& center, double r,
                            const PdeExitConfig& config) {
  if (v.dimension() != 2) throw InvalidInput("pde exit time: d = 2 only");
  if (!(r > 0)) throw InvalidInput("pde exit time: radius must be positive");
  if (config.points_per_wavelength < 4 || config.min_points_per_radius < 4)
    throw InvalidInput("pde exit time: resolution settings too small");
  const double wl = wavelength(v);
  double need = config.min_points_per_radius;
  if (std::isfinite(wl)) need = std::max(need, std::ceil(r * config.points_per_wavelength / wl));
  const double nodes = std::pow(2 * need + 1, 2);
  if (nodes > static_cast<double>(config.max_nodes))
    throw BudgetError("pde exit time: resolving r = " + std::to_string(r) + " needs " +
                      std::to_string(static_cast<long long>(nodes)) + " nodes");

  PdeExitResult res;
  res.m = static_cast<int>(need);
  res.h = r / res.m;
  res.center = center;
  res.r = r;
  const int side = 2 * res.m + 1, top = v.scale_count() - 1;
  const double h = res.h, shift = v.evaluate(0, top, center.data(), nullptr);
  auto flat = [side](int i, int j) { return static_cast<Eigen::Index>(i) * side + j; };
  auto weight = [&](const Eigen::Vector2d& x) { return std::exp(-2 * (v.evaluate(0, top, x.data(), nullptr) - shift)); };

  std::vector<Eigen::Index> index(static_cast<std::size_t>(side) * side, -1);
  Eigen::Index unknowns = 0;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      if ((res.node(i, j) - center).squaredNorm() < r * r * (1 - 1e-12)) index[flat(i, j)] = unknowns++;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(unknowns);
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const Eigen::Index me = index[flat(i, j)];
      if (me < 0) continue;
      const Eigen::Vector2d x = res.node(i, j);
      rhs[me] = 2 * weight(x) * h * h;
      double diag = 0;
      for (int s = 0; s < 4; ++s) {
        const int ni = i + di[s], nj = j + dj[s];
        const double w = weight(x + 0.5 * h * Eigen::Vector2d(di[s], dj[s]));
        diag += w;
        const Eigen::Index other = (ni >= 0 && nj >= 0 && ni < side && nj < side) ? index[flat(ni, nj)] : -1;
        if (other >= 0) trip.emplace_back(me, other, -w);
      }
      trip.emplace_back(me, me, diag);
    }
  Eigen::SparseMatrix<double> a(unknowns, unknowns);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolverError("pde exit time: factorization failed", {});
  Eigen::VectorXd sol = ldlt.solve(rhs);

  res.f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(side) * side, kNan);
  for (Eigen::Index k = 0; k < res.f.size(); ++k)
    if (index[k] >= 0) res.f[k] = sol[index[k]];
  res.center_value = res.at(res.m, res.m);
  return res;
}

PdeExitResult pde_exit_time(const PotentialExpr& u, double r, const PdeExitConfig& config, const SolverConfig& cell) {
  auto res = pde_exit_time(single(u), Eigen::Vector2d::Zero(), r, config);
  res.lambda_max = effective_diffusivity(u, cell).lambda_max();
  res.ratio = res.center_value * res.lambda_max / (r * r);
  return res;
}

// ----------------------------------------------------------- ergodicity

ErgodicityReport ergodicity_check(const PotentialExpr& u, const Eigen::VectorXd& l, int n, double tol) {
  const int d = u.dimension();
  if (d > 3) throw InvalidInput("ergodicity check: d <= 3");
  if (l.size() != d) throw InvalidInput("ergodicity check: direction has wrong dimension");
  if (l.norm() == 0) throw InvalidInput("ergodicity check: direction must be non-zero");
  GridField ug = sample_grid(u, n);
  GridField w(ug.shape, (-2.0 * ug.samples.array()).exp().matrix());
  FiniteVolumeOperator op(w, Eigen::MatrixXd::Identity(d, d));
  const GridShape& g = ug.shape;
  const double h = g.spacing();

  ErgodicityReport rep;
  rep.n = n;
  Eigen::VectorXd chi;
  rep.chi_iterations = pcg_solve(op, op.rhs(l), chi, tol, 100000);

  // Edge energies W (l.v - D chi)^2 and their split onto the two end nodes.
  Eigen::VectorXd node_energy = Eigen::VectorXd::Zero(w.samples.size()), total = node_energy, back;
  for (std::size_t e = 0; e < op.edges().size(); ++e) {
    const auto& edge = op.edges()[e];
    double lv = 0;
    for (int a = 0; a < d; ++a) lv += edge.v[a] * l[a];
    Eigen::VectorXd grad = (-op.difference(chi, e)).array() + lv;
    Eigen::VectorXd en = edge.weight.cwiseProduct(grad.cwiseProduct(grad));
    total += en;
    op.shift(en, e, -1, back);
    node_energy += 0.5 * (en + back);
  }
  rep.ldl = total.mean() / w.samples.mean();

  Eigen::VectorXd b = -2.0 * (node_energy - rep.ldl * w.samples);
  rep.rhs_mean = std::abs(b.sum()) / b.cwiseAbs().sum();
  if (!std::isfinite(rep.rhs_mean) && b.cwiseAbs().sum() == 0) rep.rhs_mean = 0;
  if (rep.rhs_mean > 1e-8) throw SolverError("ergodicity check: right-hand side has non-zero Gibbs mean", {});
  Eigen::VectorXd phi;
  rep.phi_iterations = pcg_solve(op, b, phi, tol, 100000);

  // Independent check: central differences with the analytic gradient of U,
  // F = l.x - chi continued linearly across the period.
  double ss = 0;
  const std::size_t total_nodes = g.size();
  for (std::size_t k = 0; k < total_nodes; ++k) {
    auto idx = g.unflatten(k);
    double x[3] = {0, 0, 0}, grad[3] = {0, 0, 0};
    for (int a = 0; a < d; ++a) x[a] = idx[a] * h;
    u.evaluate(x, grad);
    auto psi_at = [&](int axis, int s) {
      auto j = idx;
      double lx = 0;
      for (int a = 0; a < d; ++a) lx += l[a] * x[a];
      if (s != 0) {
        j[axis] = (idx[axis] + s + n) % n;
        lx += s * l[axis] * h;
      }
      const std::size_t f = g.flatten(j);
      const double fv = lx - chi[static_cast<Eigen::Index>(f)];
      return fv * fv - phi[static_cast<Eigen::Index>(f)];
    };
    const double p0 = psi_at(0, 0);
    double lpsi = 0;
    for (int a = 0; a < d; ++a) {
      const double pp = psi_at(a, 1), pm = psi_at(a, -1);
      lpsi += 0.5 * (pp - 2 * p0 + pm) / (h * h) - grad[a] * (pp - pm) / (2 * h);
    }
    ss += (lpsi - rep.ldl) * (lpsi - rep.ldl);
  }
  rep.residual = std::sqrt(ss / static_cast<double>(total_nodes)) / rep.ldl;
  return rep;
}

// ----------------------------------------------------------------- Green

GreenReport green_monotonicity_check(const PotentialExpr& u, const PotentialExpr& p, int n, int probes,
                                     std::uint64_t seed) {
  const int d = u.dimension();
  if (d < 1 || d > 2 || p.dimension() != d) throw InvalidInput("green check: d must be 1 or 2 for both potentials");
  if (n < 2 || probes < 1) throw InvalidInput("green check: need n >= 2 and at least one probe");
  const double h = 1.0 / (n + 1);
  const Eigen::Index size = d == 1 ? n : static_cast<Eigen::Index>(n) * n;

  // Osc(P) over the closed square on the node and midpoint lattice.
  double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
  const int fine = 2 * (n + 1);
  for (int i = 0; i <= fine; ++i)
    for (int j = 0; j <= (d == 2 ? fine : 0); ++j) {
      double x[2] = {i * 0.5 * h, j * 0.5 * h};
      const double v = p.evaluate(x, nullptr);
      pmin = std::min(pmin, v);
      pmax = std::max(pmax, v);
    }
  GreenReport rep;
  rep.lambda = std::exp(2 * (pmax - pmin));
  rep.hypothesis_holds = std::exp(-2 * pmin) <= rep.lambda * (1 + 1e-14);

  auto assemble = [&](bool perturbed) {
    std::vector<Eigen::Triplet<double>> trip;
    auto coeff = [&](double x0, double x1) {
      double x[2] = {x0, x1};
      double v = u.evaluate(x, nullptr);
      if (perturbed) v += p.evaluate(x, nullptr);
      return std::exp(-2 * v) / (h * h);
    };
    auto id = [&](int i, int j) { return static_cast<Eigen::Index>(i) * (d == 2 ? n : 1) + j; };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < (d == 2 ? n : 1); ++j) {
        const double xi = (i + 1) * h, yj = d == 2 ? (j + 1) * h : 0.0;
        double diag = 0;
        for (int axis = 0; axis < d; ++axis)
          for (int s : {-1, 1}) {
            const int ni = axis == 0 ? i + s : i, nj = axis == 1 ? j + s : j;
            const double c =
                coeff(xi + (axis == 0 ? 0.5 * s * h : 0.0), d == 2 ? yj + (axis == 1 ? 0.5 * s * h : 0.0) : 0.0);
            diag += c;
            const bool inside = ni >= 0 && ni < n && (d == 1 || (nj >= 0 && nj < n));
            if (inside) trip.emplace_back(id(i, j), id(ni, nj), -c);
          }
        trip.emplace_back(id(i, j), id(i, j), diag);
      }
    Eigen::SparseMatrix<double> a(size, size);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
  };
  Eigen::SparseMatrix<double> aq = assemble(false), am = assemble(true);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> q(aq), m(am);
  if (q.info() != Eigen::Success || m.info() != Eigen::Success)
    throw SolverError("green check: factorization failed", {});

  const auto key = Philox4x32::key_of(seed);
  const double cell = std::pow(h, d);
  for (int k = 0; k < probes; ++k) {
    Eigen::VectorXd f(size);
    for (Eigen::Index i = 0; i < size; i += 2) {
      auto w = Philox4x32::generate(StreamCounter::make(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i), 0, false), key);
      auto z = normal_pair(w[0], w[1]);
      f[i] = z[0];
      if (i + 1 < size) f[i + 1] = z[1];
    }
    const double gq = cell * f.dot(q.solve(f)), gm = cell * f.dot(m.solve(f));
    rep.q_forms.push_back(gq);
    rep.m_forms.push_back(gm);
    rep.ratios.push_back(gq / (rep.lambda * gm));
    if (!(gq <= rep.lambda * gm * (1 + 1e-12))) rep.all_hold = false;
  }
  return rep;
}

}  // namespace homog
