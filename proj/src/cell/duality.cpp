#include "homog/cell/duality.hpp"

#include "homog/cell/fft.hpp"
#include "homog/cell/operator.hpp"
#include "homog/util/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace homog {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using cvec = std::vector<std::complex<double>>;

// Leray projection onto divergence-free, mean-zero fields without Nyquist
// content. `f` stacks the d components, each of length N^d.
void leray_project(const RealFft& fft, int d, Eigen::VectorXd& f) {
  const auto n = static_cast<Eigen::Index>(fft.shape().size());
  std::vector<cvec> spec(d, cvec(fft.spectrum_size()));
  for (int a = 0; a < d; ++a) fft.forward(f.data() + a * n, spec[a].data());
  for (std::size_t s = 0; s < fft.spectrum_size(); ++s) {
    if (s == 0 || fft.is_nyquist(s)) {
      for (int a = 0; a < d; ++a) spec[a][s] = 0.0;
      continue;
    }
    const auto& k = fft.wave_vector(s);
    std::complex<double> kp = 0.0;
    double k2 = 0;
    for (int a = 0; a < d; ++a) {
      kp += double(k[a]) * spec[a][s];
      k2 += double(k[a]) * k[a];
    }
    for (int a = 0; a < d; ++a) spec[a][s] -= double(k[a]) * kp / k2;
  }
  for (int a = 0; a < d; ++a) fft.inverse(spec[a].data(), f.data() + a * n);
}

}  // namespace

double voigt_reiss(const PotentialExpr& u) {
  const int d = u.dimension();
  if (d > 3) throw InvalidInput("voigt_reiss: d <= 3 supported");
  const std::size_t cap = std::size_t{1} << 24;
  auto product = [&](int n) {
    GridField g = sample_grid(u, n);
    const double c = 0.5 * (g.samples.maxCoeff() + g.samples.minCoeff());
    Eigen::ArrayXd s = g.samples.array() - c;
    return (2.0 * s).exp().mean() * (-2.0 * s).exp().mean();
  };
  int n = static_cast<int>(std::max(8L, next_power_of_two(4L * std::max(1, u.max_frequency()))));
  double prev = product(n);
  // The trapezoid rule is spectrally accurate for periodic integrands.
  while (std::pow(2.0 * n, d) <= static_cast<double>(cap)) {
    n *= 2;
    double next = product(n);
    bool done = std::abs(next - prev) <= 1e-12 * next;
    prev = next;
    if (done) return 1.0 / prev;
  }
  throw BudgetError("voigt_reiss: quadrature did not reach 1e-10 within the point budget");
}

EffectiveTensor dual_diffusivity(const PotentialExpr& u, const SolverConfig& config) {
  const int d = u.dimension();
  if (d < 2) throw InvalidInput("dual_diffusivity: the solenoidal class is trivial in d = 1");
  const int n = resolve_resolution(d, u.max_frequency(), config);
  GridField g = sample_grid(u, n);
  const double c = 0.5 * (g.samples.maxCoeff() + g.samples.minCoeff());
  const Eigen::VectorXd w = (2.0 * (g.samples.array() - c)).exp().matrix();
  const double wbar = w.mean();
  const auto npts = static_cast<Eigen::Index>(g.shape.size());
  RealFft fft(g.shape);

  auto weight = [&](const Eigen::VectorXd& p, bool inverse) {
    Eigen::VectorXd out(p.size());
    for (int a = 0; a < d; ++a) {
      if (inverse)
        out.segment(a * npts, npts) = p.segment(a * npts, npts).cwiseQuotient(w);
      else
        out.segment(a * npts, npts) = p.segment(a * npts, npts).cwiseProduct(w);
    }
    return out;
  };

  EffectiveTensor t;
  Eigen::MatrixXd q(d, d);
  std::vector<Eigen::VectorXd> sols(d);
  for (int l = 0; l < d; ++l) {
    // Minimize mean(w |e_l - p|^2) over the projected subspace: Pi(w p) = Pi(w e_l).
    Eigen::VectorXd el = Eigen::VectorXd::Zero(d * npts);
    el.segment(l * npts, npts).setOnes();
    Eigen::VectorXd b = weight(el, false);
    leray_project(fft, d, b);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(d * npts);
    const double bn = b.norm();
    std::vector<double> hist{0.0};
    int it = 0;
    // A constant weight projects to round-off; p = 0 is then exact.
    if (bn > 1e-13 * weight(el, false).norm()) {
      hist[0] = 1.0;
      Eigen::VectorXd r = b, z = weight(r, true), ap;
      leray_project(fft, d, z);
      Eigen::VectorXd dir = z;
      double rz = r.dot(z);
      for (it = 1;; ++it) {
        if (it > config.max_iterations)
          throw SolverError("dual_diffusivity: no convergence in " + std::to_string(config.max_iterations) + " iterations", hist);
        ap = weight(dir, false);
        leray_project(fft, d, ap);
        const double alpha = rz / dir.dot(ap);
        p += alpha * dir;
        r -= alpha * ap;
        hist.push_back(r.norm() / bn);
        if (hist.back() <= config.tolerance) break;
        z = weight(r, true);
        leray_project(fft, d, z);
        const double rz_new = r.dot(z);
        dir = z + (rz_new / rz) * dir;
        rz = rz_new;
      }
    }
    t.iterations = std::max(t.iterations, it);
    t.residual = std::max(t.residual, hist.back());
    sols[l] = el - p;
  }
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double s = 0;
      for (int a = 0; a < d; ++a)
        s += sols[i].segment(a * npts, npts).cwiseProduct(w).dot(sols[j].segment(a * npts, npts));
      q(i, j) = q(j, i) = s / static_cast<double>(npts) / wbar;
    }
  EffectiveTensor out = make_tensor(q);
  out.iterations = t.iterations;
  out.residual = t.residual;
  out.resolution = n;
  return out;
}

double StreamTensor::skew_defect() const {
  double m = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) m = std::max(m, (H(i, j, k) + H(j, i, k)).cwiseAbs().maxCoeff());
  return m;
}

double StreamTensor::divergence_defect() const {
  RealFft fft(shape);
  const int d = dim;
  double worst = 0;
  cvec spec(fft.spectrum_size()), acc(fft.spectrum_size());
  Eigen::VectorXd div(static_cast<Eigen::Index>(shape.size()));
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int j = 0; j < d; ++j) {
        fft.forward(H(i, j, m).data(), spec.data());
        for (std::size_t s = 0; s < spec.size(); ++s) {
          if (fft.is_nyquist(s)) continue;
          acc[s] += std::complex<double>(0.0, kTwoPi * fft.wave_vector(s)[j]) * spec[s];
        }
      }
      fft.inverse(acc.data(), div.data());
      worst = std::max(worst, (div - P(i, m)).cwiseAbs().maxCoeff());
    }
  return worst;
}

StreamTensor stream_tensor(const PotentialExpr& u, const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.discretization = Discretization::Spectral;
  const int d = u.dimension();
  const int n = resolve_resolution(d, u.max_frequency(), cfg);
  GridField g = sample_grid(u, n);
  CorrectorSolution sol;
  StreamTensor st;
  st.diffusivity = effective_diffusivity(g, cfg, &sol);
  st.shape = g.shape;
  st.dim = d;
  const auto npts = static_cast<Eigen::Index>(g.shape.size());

  SpectralOperator op(sol.weight, {});
  std::vector<std::vector<Eigen::VectorXd>> grad(d);
  for (int j = 0; j < d; ++j) grad[j] = op.gradient(sol.chi[j].samples);
  const Eigen::MatrixXd dinv = st.diffusivity.matrix.inverse();
  const Eigen::VectorXd wn = sol.weight.samples / sol.weight.samples.mean();

  // P_im = delta_im - (w / mean w) sum_j (delta_ij - d_i chi_j) Dinv_jm
  st.p.assign(d * d, Eigen::VectorXd::Zero(npts));
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(npts);
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd e = -grad[j][i];
        if (i == j) e.array() += 1.0;
        s += dinv(j, m) * e;
      }
      Eigen::VectorXd pim = -wn.cwiseProduct(s);
      if (i == m) pim.array() += 1.0;
      st.p[i * d + m] = pim;
    }

  RealFft fft(g.shape);
  std::vector<cvec> phat(d * d, cvec(fft.spectrum_size()));
  for (int k = 0; k < d * d; ++k) fft.forward(st.p[k].data(), phat[k].data());
  st.h.assign(d * d * d, Eigen::VectorXd::Zero(npts));
  cvec hs(fft.spectrum_size());
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      for (int m = 0; m < d; ++m) {
        for (std::size_t s = 0; s < hs.size(); ++s) {
          if (s == 0 || fft.is_nyquist(s)) {
            hs[s] = 0.0;
            continue;
          }
          const auto& k = fft.wave_vector(s);
          double k2 = 0;
          for (int e = 0; e < d; ++e) k2 += double(k[e]) * k[e];
          hs[s] = (phat[a * d + m][s] * double(k[b]) - phat[b * d + m][s] * double(k[a])) /
                  (std::complex<double>(0.0, kTwoPi) * k2);
        }
        Eigen::VectorXd& hab = st.h[(a * d + b) * d + m];
        fft.inverse(hs.data(), hab.data());
        st.h[(b * d + a) * d + m] = -hab;
      }
  return st;
}

}  // namespace homog
