#include "homog/cell/multigrid.hpp"

#include "homog/util/errors.hpp"

#include <array>
#include <cmath>

namespace homog {
namespace {


std::array<int, 3> digits(int o, int d) {
  std::array<int, 3> delta{0, 0, 0};
  for (int a = d - 1; a >= 0; --a) {
    delta[a] = o % 3 - 1;
    o /= 3;
  }
  return delta;
}

// Flat neighbour index of node idx shifted by delta, periodic.
std::size_t neighbour(const GridShape& s, std::array<int, 3> idx, const std::array<int, 3>& delta) {
  for (int a = 0; a < s.dim; ++a) idx[a] += delta[a];
  return s.flatten(idx);
}

// Bilinear weight of a fine offset delta in {-1,0,1}^d from its coarse parent.
double interp_weight(const std::array<int, 3>& delta, int d) {
  double w = 1;
  for (int a = 0; a < d; ++a) w *= delta[a] == 0 ? 1.0 : 0.5;
  return w;
}

NodeStencil galerkin(const NodeStencil& fine) {
  const GridShape& fs = fine.shape;
  const int d = fs.dim, width = fine.width;
  GridShape cs{d, fs.n / 2};
  NodeStencil coarse{cs, width, std::vector<double>(cs.size() * width, 0.0)};
  for (std::size_t ci = 0; ci < cs.size(); ++ci) {
    auto cidx = cs.unflatten(ci);
    std::array<int, 3> base{2 * cidx[0], 2 * cidx[1], 2 * cidx[2]};
    for (int oi = 0; oi < width; ++oi) {
      auto di = digits(oi, d);
      const double pi = interp_weight(di, d);
      const std::size_t fi = neighbour(fs, base, di);
      for (int os = 0; os < width; ++os) {
        const double a = fine.coefficients[fi * width + os];
        if (a == 0.0) continue;
        auto ds = digits(os, d);
        // fine target j = 2I + t with t = di + ds in [-2, 2]^d; distribute
        // over coarse offsets J with bilinear weights.
        std::array<int, 3> t{0, 0, 0};
        for (int k = 0; k < d; ++k) t[k] = di[k] + ds[k];
        for (int oj = 0; oj < width; ++oj) {
          auto dj = digits(oj, d);
          double w = 1;
          for (int k = 0; k < d && w != 0; ++k) {
            int r = t[k] - 2 * dj[k];  // offset of j from the coarse node I + J, in fine cells
            w *= r == 0 ? 1.0 : std::abs(r) == 1 ? 0.5 : 0.0;
          }
          if (w != 0) coarse.coefficients[ci * width + oj] += pi * a * w;
        }
      }
    }
  }
  return coarse;
}

// Calls fn(i, nb) for every node with nb the 3^d neighbour indices in
// offset order. d <= 2.
template <class Fn>
void for_each_node(const GridShape& s, bool forward, Fn&& fn) {
  const int n = s.n;
  std::size_t nb[9];
  if (s.dim == 1) {
    for (int t = 0; t < n; ++t) {
      int i = forward ? t : n - 1 - t;
      nb[0] = (i + n - 1) % n;
      nb[1] = i;
      nb[2] = (i + 1) % n;
      fn(static_cast<std::size_t>(i), nb);
    }
    return;
  }
  for (int t = 0; t < n; ++t) {
    int i = forward ? t : n - 1 - t;
    const std::size_t rows[3] = {std::size_t((i + n - 1) % n) * n, std::size_t(i) * n, std::size_t((i + 1) % n) * n};
    for (int u = 0; u < n; ++u) {
      int j = forward ? u : n - 1 - u;
      const std::size_t cols[3] = {std::size_t((j + n - 1) % n), std::size_t(j), std::size_t((j + 1) % n)};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) nb[a * 3 + b] = rows[a] + cols[b];
      fn(rows[1] + cols[1], nb);
    }
  }
}

}  // namespace

void NodeStencil::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const {
  out.resize(f.size());
  const double* c = coefficients.data();
  for_each_node(shape, true, [&](std::size_t i, const std::size_t* nb) {
    double s = 0;
    for (int o = 0; o < width; ++o) s += c[i * width + o] * f[nb[o]];
    out[i] = s;
  });
}

Multigrid::Multigrid(NodeStencil fine, int smoothing_steps) : smoothing_steps_(smoothing_steps) {
  if (fine.shape.dim > 2) throw InvalidInput("multigrid: d <= 2 supported");
  if (fine.coefficients.size() != fine.shape.size() * fine.width) throw InvalidInput("multigrid: stencil size mismatch");
  levels_.push_back(std::move(fine));
  while (levels_.back().shape.n > 4) levels_.push_back(galerkin(levels_.back()));

  const NodeStencil& c = levels_.back();
  const auto m = static_cast<Eigen::Index>(c.shape.size());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto idx = c.shape.unflatten(static_cast<std::size_t>(i));
    for (int o = 0; o < c.width; ++o)
      dense(i, static_cast<Eigen::Index>(neighbour(c.shape, idx, digits(o, c.shape.dim)))) += c.coefficients[i * c.width + o];
  }
  dense = 0.5 * (dense + dense.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  const double cut = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = es.eigenvalues().unaryExpr([&](double l) { return l > cut ? 1.0 / l : 0.0; });
  coarse_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

void Multigrid::smooth(const NodeStencil& a, const Eigen::VectorXd& b, Eigen::VectorXd& x, bool forward) const {
  const int w = a.width, centre = w / 2;
  const double* c = a.coefficients.data();
  for (int sweep = 0; sweep < smoothing_steps_; ++sweep)
    for_each_node(a.shape, forward, [&](std::size_t i, const std::size_t* nb) {
      double s = b[i];
      for (int o = 0; o < w; ++o)
        if (o != centre) s -= c[i * w + o] * x[nb[o]];
      x[i] = s / c[i * w + centre];
    });
}

void Multigrid::cycle(std::size_t level, const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
  const NodeStencil& a = levels_[level];
  if (level + 1 == levels_.size()) {
    x = coarse_pinv_ * b;
    return;
  }
  x.setZero(b.size());
  smooth(a, b, x, true);

  Eigen::VectorXd ax;
  a.apply(x, ax);
  const Eigen::VectorXd r = b - ax;

  const GridShape& fs = a.shape;
  const GridShape& cs = levels_[level + 1].shape;
  const int d = fs.dim, width = a.width;
  Eigen::VectorXd bc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cs.size()));
  for (std::size_t ci = 0; ci < cs.size(); ++ci) {
    auto cidx = cs.unflatten(ci);
    std::array<int, 3> base{2 * cidx[0], 2 * cidx[1], 2 * cidx[2]};
    double s = 0;
    for (int o = 0; o < width; ++o) {
      auto dl = digits(o, d);
      s += interp_weight(dl, d) * r[neighbour(fs, base, dl)];
    }
    bc[ci] = s;
  }
  Eigen::VectorXd xc;
  cycle(level + 1, bc, xc);
  for (std::size_t ci = 0; ci < cs.size(); ++ci) {
    auto cidx = cs.unflatten(ci);
    std::array<int, 3> base{2 * cidx[0], 2 * cidx[1], 2 * cidx[2]};
    for (int o = 0; o < width; ++o) {
      auto dl = digits(o, d);
      x[neighbour(fs, base, dl)] += interp_weight(dl, d) * xc[ci];
    }
  }
  smooth(a, b, x, false);
}

void Multigrid::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  cycle(0, r, z);
  z.array() -= z.mean();
}

}  // namespace homog
