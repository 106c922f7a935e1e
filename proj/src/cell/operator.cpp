#include "homog/cell/operator.hpp"

#include "homog/util/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace homog {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using cvec = std::vector<std::complex<double>>;

Eigen::MatrixXd inner_or_identity(const Eigen::MatrixXd& inner, int d) {
  if (inner.size() == 0) return Eigen::MatrixXd::Identity(d, d);
  if (inner.rows() != d || inner.cols() != d) throw InvalidInput("cell operator: inner tensor has wrong shape");
  if ((inner - inner.transpose()).cwiseAbs().maxCoeff() > 1e-12 * inner.cwiseAbs().maxCoeff())
    throw InvalidInput("cell operator: inner tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  if (es.eigenvalues().minCoeff() <= 0) throw InvalidInput("cell operator: inner tensor must be positive definite");
  return inner;
}

void check_weight(const GridField& w) {
  if (!(w.samples.minCoeff() > 0.0) || !w.samples.allFinite())
    throw InvalidInput("cell operator: weight must be finite and strictly positive");
}

}  // namespace

std::unique_ptr<CellOperator> CellOperator::create(const GridField& w, const Eigen::MatrixXd& inner,
                                                   Discretization kind, Preconditioner pre) {
  if (kind == Discretization::Spectral) return std::make_unique<SpectralOperator>(w, inner, pre);
  return std::make_unique<FiniteVolumeOperator>(w, inner, pre);
}

// ---------------------------------------------------------------- finite volume

FiniteVolumeOperator::FiniteVolumeOperator(const GridField& w, const Eigen::MatrixXd& inner, Preconditioner pre)
    : CellOperator(w.shape) {
  check_weight(w);
  const int d = shape_.dim;
  const Eigen::MatrixXd a = inner_or_identity(inner, d);
  mean_w_ = w.samples.mean();

  // A = sum_v c_v v v^T with axis directions and e_i +- e_j diagonals; needs
  // A to be diagonally dominant so every c_v >= 0.
  for (int i = 0; i < d; ++i) {
    double c = a(i, i);
    for (int j = 0; j < d; ++j)
      if (j != i) c -= std::abs(a(i, j));
    if (c < -1e-14 * a(i, i))
      throw InvalidInput("finite-volume stencil needs a diagonally dominant inner tensor; use the spectral discretization");
    Edge e;
    e.v[i] = 1;
    e.coefficient = std::max(c, 0.0);
    edges_.push_back(e);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      if (a(i, j) == 0.0) continue;
      Edge e;
      e.v[i] = 1;
      e.v[j] = a(i, j) > 0 ? 1 : -1;
      e.coefficient = std::abs(a(i, j));
      edges_.push_back(e);
    }
  std::erase_if(edges_, [](const Edge& e) { return e.coefficient == 0.0; });

  const std::size_t n = shape_.size();
  Eigen::VectorXd next(n);
  for (Edge& e : edges_) {
    periodic_roll(shape_, w.samples.data(), e.v, next.data());
    e.weight = e.coefficient * 2.0 * w.samples.cwiseProduct(next).cwiseQuotient(w.samples + next);
  }

  const double h2 = shape_.spacing() * shape_.spacing();
  std::vector<double> mean_edge;
  for (const Edge& e : edges_) mean_edge.push_back(e.weight.mean());
  symbol_.assign(fft_.spectrum_size(), 0.0);
  for (std::size_t s = 0; s < symbol_.size(); ++s) {
    const auto& k = fft_.wave_vector(s);
    double sym = 0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      double kv = 0;
      for (int a2 = 0; a2 < d; ++a2) kv += double(k[a2]) * edges_[e].v[a2];
      sym += mean_edge[e] * (2.0 - 2.0 * std::cos(kTwoPi * kv / shape_.n)) / h2;
    }
    symbol_[s] = sym;
  }

  if (pre == Preconditioner::Multigrid) {
    if (d > 2) throw InvalidInput("multigrid preconditioner supports d <= 2");
    const int width = d == 1 ? 3 : 9;
    NodeStencil st{shape_, width, std::vector<double>(n * width, 0.0)};
    auto offset = [&](const std::array<int, 3>& v, int sign) {
      int o = 0;
      for (int a2 = 0; a2 < d; ++a2) o = o * 3 + (sign * v[a2] + 1);
      return o;
    };
    const int centre = width / 2;
    Eigen::VectorXd back(n);
    for (const Edge& e : edges_) {
      periodic_roll(shape_, e.weight.data(), {-e.v[0], -e.v[1], -e.v[2]}, back.data());
      const int fwd = offset(e.v, 1), bwd = offset(e.v, -1);
      for (std::size_t i = 0; i < n; ++i) {
        st.coefficients[i * width + centre] += (e.weight[i] + back[i]) / h2;
        st.coefficients[i * width + fwd] -= e.weight[i] / h2;
        st.coefficients[i * width + bwd] -= back[i] / h2;
      }
    }
    multigrid_ = std::make_unique<Multigrid>(std::move(st));
  }
}

void FiniteVolumeOperator::shift(const Eigen::VectorXd& in, std::size_t e, int sign, Eigen::VectorXd& out) const {
  const auto& v = edges_[e].v;
  out.resize(in.size());
  periodic_roll(shape_, in.data(), {sign * v[0], sign * v[1], sign * v[2]}, out.data());
}

Eigen::VectorXd FiniteVolumeOperator::difference(const Eigen::VectorXd& f, std::size_t e) const {
  Eigen::VectorXd s;
  shift(f, e, +1, s);
  return (s - f) / shape_.spacing();
}

void FiniteVolumeOperator::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const {
  out.setZero(f.size());
  Eigen::VectorXd s(f.size()), g(f.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    shift(f, e, +1, s);
    g = edges_[e].weight.cwiseProduct(f - s);
    out += g;
    shift(g, e, -1, s);
    out -= s;
  }
  out /= shape_.spacing() * shape_.spacing();
}

Eigen::VectorXd FiniteVolumeOperator::rhs(const Eigen::VectorXd& l) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape_.size()));
  Eigen::VectorXd s;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    double vl = 0;
    for (int a = 0; a < shape_.dim; ++a) vl += edges_[e].v[a] * l[a];
    if (vl == 0.0) continue;
    shift(edges_[e].weight, e, -1, s);
    b -= vl * (edges_[e].weight - s);
  }
  return b / shape_.spacing();
}

void FiniteVolumeOperator::project(Eigen::VectorXd& f) const { f.array() -= f.mean(); }

void FiniteVolumeOperator::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  if (multigrid_) {
    multigrid_->apply(r, z);
    return;
  }
  cvec spec(fft_.spectrum_size());
  fft_.forward(r.data(), spec.data());
  for (std::size_t s = 0; s < spec.size(); ++s) spec[s] = symbol_[s] > 0 ? spec[s] / symbol_[s] : 0.0;
  spec[0] = 0.0;
  z.resize(r.size());
  fft_.inverse(spec.data(), z.data());
}

Eigen::MatrixXd FiniteVolumeOperator::energy(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const {
  const int m = static_cast<int>(dirs.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    std::vector<Eigen::VectorXd> grad(m);
    for (int a = 0; a < m; ++a) {
      double vl = 0;
      for (int k = 0; k < shape_.dim; ++k) vl += edges_[e].v[k] * dirs(k, a);
      grad[a] = (-difference(chi[a], e)).array() + vl;
    }
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        double val = edges_[e].weight.cwiseProduct(grad[a]).dot(grad[b]) / static_cast<double>(shape_.size());
        out(a, b) += val;
        if (b != a) out(b, a) += val;
      }
  }
  return out;
}

Eigen::MatrixXd FiniteVolumeOperator::flux(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const {
  const int m = static_cast<int>(dirs.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    std::vector<double> vl(m);
    for (int a = 0; a < m; ++a) {
      vl[a] = 0;
      for (int k = 0; k < shape_.dim; ++k) vl[a] += edges_[e].v[k] * dirs(k, a);
    }
    for (int b = 0; b < m; ++b) {
      Eigen::VectorXd q = edges_[e].weight.array() * ((-difference(chi[b], e)).array() + vl[b]);
      const double mean_q = q.mean();
      for (int a = 0; a < m; ++a) out(a, b) += vl[a] * mean_q;
    }
  }
  return out;
}

// ---------------------------------------------------------------- spectral

SpectralOperator::SpectralOperator(const GridField& w, const Eigen::MatrixXd& inner, Preconditioner pre)
    : CellOperator(w.shape), w_(w.samples), a_(inner_or_identity(inner, w.shape.dim)) {
  check_weight(w);
  if (pre == Preconditioner::Multigrid && shape_.dim <= 2) {
    try {
      auxiliary_ = std::make_unique<FiniteVolumeOperator>(w, a_, Preconditioner::Multigrid);
    } catch (const InvalidInput&) {
      auxiliary_.reset();  // no monotone stencil; keep the Fourier symbol
    }
  }
  mean_w_ = w_.mean();
  symbol_.assign(fft_.spectrum_size(), 0.0);
  const int d = shape_.dim;
  for (std::size_t s = 0; s < symbol_.size(); ++s) {
    if (fft_.is_nyquist(s)) continue;
    const auto& k = fft_.wave_vector(s);
    Eigen::VectorXd kv(d);
    for (int a = 0; a < d; ++a) kv[a] = kTwoPi * k[a];
    symbol_[s] = mean_w_ * kv.dot(a_ * kv);
  }
}

std::vector<Eigen::VectorXd> SpectralOperator::gradient(const Eigen::VectorXd& f) const {
  const int d = shape_.dim;
  cvec spec(fft_.spectrum_size()), tmp(spec.size());
  fft_.forward(f.data(), spec.data());
  std::vector<Eigen::VectorXd> g(d, Eigen::VectorXd(f.size()));
  for (int a = 0; a < d; ++a) {
    for (std::size_t s = 0; s < spec.size(); ++s) {
      const auto& k = fft_.wave_vector(s);
      tmp[s] = fft_.is_nyquist(s) ? 0.0 : std::complex<double>(0.0, kTwoPi * k[a]) * spec[s];
    }
    fft_.inverse(tmp.data(), g[a].data());
  }
  return g;
}

Eigen::VectorXd SpectralOperator::divergence(const std::vector<Eigen::VectorXd>& q) const {
  const int d = shape_.dim;
  cvec acc(fft_.spectrum_size(), 0.0), spec(acc.size());
  for (int b = 0; b < d; ++b) {
    fft_.forward(q[b].data(), spec.data());
    for (std::size_t s = 0; s < spec.size(); ++s) {
      if (fft_.is_nyquist(s)) continue;
      const auto& k = fft_.wave_vector(s);
      acc[s] += std::complex<double>(0.0, kTwoPi * k[b]) * spec[s];
    }
  }
  Eigen::VectorXd out(q[0].size());
  fft_.inverse(acc.data(), out.data());
  return out;
}

void SpectralOperator::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const {
  const int d = shape_.dim;
  auto g = gradient(f);
  std::vector<Eigen::VectorXd> q(d, Eigen::VectorXd::Zero(f.size()));
  for (int b = 0; b < d; ++b)
    for (int a = 0; a < d; ++a)
      if (a_(b, a) != 0.0) q[b] += a_(b, a) * g[a];
  for (int b = 0; b < d; ++b) q[b] = q[b].cwiseProduct(w_);
  out = -divergence(q);
}

Eigen::VectorXd SpectralOperator::rhs(const Eigen::VectorXd& l) const {
  const int d = shape_.dim;
  Eigen::VectorXd al = a_ * l;
  std::vector<Eigen::VectorXd> q(d);
  for (int b = 0; b < d; ++b) q[b] = al[b] * w_;
  return -divergence(q);
}

void SpectralOperator::project(Eigen::VectorXd& f) const {
  cvec spec(fft_.spectrum_size());
  fft_.forward(f.data(), spec.data());
  for (std::size_t s = 0; s < spec.size(); ++s)
    if (s == 0 || fft_.is_nyquist(s)) spec[s] = 0.0;
  fft_.inverse(spec.data(), f.data());
}

void SpectralOperator::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  if (auxiliary_) {
    // r has no Nyquist content (it lies in the range of K); any Nyquist part
    // of z is in the kernel and is removed when pcg projects the iterate.
    auxiliary_->precondition(r, z);
    return;
  }
  cvec spec(fft_.spectrum_size());
  fft_.forward(r.data(), spec.data());
  for (std::size_t s = 0; s < spec.size(); ++s) spec[s] = symbol_[s] > 0 ? spec[s] / symbol_[s] : 0.0;
  z.resize(r.size());
  fft_.inverse(spec.data(), z.data());
}

Eigen::MatrixXd SpectralOperator::energy(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const {
  const int m = static_cast<int>(dirs.cols()), d = shape_.dim;
  const double n = static_cast<double>(shape_.size());
  // e_a = l_a - grad chi_a, per component
  std::vector<std::vector<Eigen::VectorXd>> e(m);
  for (int a = 0; a < m; ++a) {
    e[a] = gradient(chi[a]);
    for (int k = 0; k < d; ++k) e[a][k] = (-e[a][k]).array() + dirs(k, a);
  }
  Eigen::MatrixXd out(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      double s = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (a_(i, j) != 0.0) s += a_(i, j) * e[a][i].cwiseProduct(w_).dot(e[b][j]);
      out(a, b) = out(b, a) = s / n;
    }
  return out;
}

Eigen::MatrixXd SpectralOperator::flux(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const {
  const int m = static_cast<int>(dirs.cols()), d = shape_.dim;
  Eigen::MatrixXd out(m, m);
  for (int b = 0; b < m; ++b) {
    auto g = gradient(chi[b]);
    Eigen::VectorXd mean_flux(d);
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd qi = Eigen::VectorXd::Zero(w_.size());
      for (int j = 0; j < d; ++j) qi += a_(i, j) * ((-g[j]).array() + dirs(j, b)).matrix();
      mean_flux[i] = qi.cwiseProduct(w_).mean();
    }
    for (int a = 0; a < m; ++a) out(a, b) = dirs.col(a).dot(mean_flux);
  }
  return out;
}

// ---------------------------------------------------------------- PCG

int pcg_solve(const CellOperator& op, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int max_iterations,
              std::vector<double>* history) {
  const double bnorm = b.norm();
  if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());
  if (bnorm == 0.0) {
    x.setZero();
    return 0;
  }
  Eigen::VectorXd r(b.size()), z, p, kp;
  op.apply(x, kp);
  r = b - kp;
  op.precondition(r, z);
  p = z;
  double rz = r.dot(z);
  std::vector<double> local;
  std::vector<double>& hist = history ? *history : local;
  hist.assign(1, r.norm() / bnorm);
  if (hist.back() <= tol) return 0;

  for (int it = 1; it <= max_iterations; ++it) {
    op.apply(p, kp);
    const double pkp = p.dot(kp);
    if (!(pkp > 0.0)) throw SolverError("pcg: operator lost positivity", hist);
    const double alpha = rz / pkp;
    x += alpha * p;
    r -= alpha * kp;
    hist.push_back(r.norm() / bnorm);
    if (!std::isfinite(hist.back())) throw SolverError("pcg: non-finite residual", hist);
    if (hist.back() <= tol) {
      op.project(x);
      return it;
    }
    op.precondition(r, z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverError("pcg: no convergence in " + std::to_string(max_iterations) + " iterations (residual " +
                        std::to_string(hist.back()) + ")",
                    hist);
}

}  // namespace homog
