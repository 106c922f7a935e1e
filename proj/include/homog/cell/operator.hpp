#pragma once

#include "homog/cell/corrector.hpp"
#include "homog/cell/fft.hpp"
#include "homog/cell/multigrid.hpp"

#include <array>
#include <memory>
#include <vector>

namespace homog {

/// Discrete periodic operator K f = -div(w A grad f) together with the
/// matching right-hand side and energy forms. K is symmetric positive
/// semi-definite with the constants as kernel.
class CellOperator {
 public:
  virtual ~CellOperator() = default;

  /// w sampled on the grid (strictly positive); A constant SPD, identity if empty.
  static std::unique_ptr<CellOperator> create(const GridField& w, const Eigen::MatrixXd& inner, Discretization kind,
                                              Preconditioner pre = Preconditioner::Fourier);

  const GridShape& shape() const noexcept { return shape_; }
  int dimension() const noexcept { return shape_.dim; }
  double mean_weight() const noexcept { return mean_w_; }

  virtual void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const = 0;
  /// Approximate inverse on the mean-zero subspace.
  virtual void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const = 0;
  /// -div(w A l).
  virtual Eigen::VectorXd rhs(const Eigen::VectorXd& l) const = 0;
  /// Removes the components outside the solution space (mean, and for the
  /// spectral form the Nyquist modes).
  virtual void project(Eigen::VectorXd& f) const = 0;
  /// E_ab = mean[(l_a - grad chi_a)^T w A (l_b - grad chi_b)], unnormalized.
  virtual Eigen::MatrixXd energy(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const = 0;
  /// F_ab = mean[l_a^T w A (l_b - grad chi_b)], the mean-flux form.
  virtual Eigen::MatrixXd flux(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const = 0;

 protected:
  explicit CellOperator(const GridShape& s) : shape_(s), fft_(s) {}
  GridShape shape_;
  RealFft fft_;
  double mean_w_ = 1.0;
};

/// Node-centred finite volumes. Each stencil direction v (integer vector)
/// carries edge weights W_v(x) = c_v * harmonic(w(x), w(x + h v)).
class FiniteVolumeOperator final : public CellOperator {
 public:
  struct Edge {
    std::array<int, 3> v{0, 0, 0};
    double coefficient = 1.0;
    Eigen::VectorXd weight;  // W_v at the edge starting at each node
  };

  FiniteVolumeOperator(const GridField& w, const Eigen::MatrixXd& inner, Preconditioner pre = Preconditioner::Fourier);

  void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const override;
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const override;
  Eigen::VectorXd rhs(const Eigen::VectorXd& l) const override;
  void project(Eigen::VectorXd& f) const override;
  Eigen::MatrixXd energy(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const override;
  Eigen::MatrixXd flux(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const override;

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// (f(x + h v) - f(x)) / h for edge e.
  Eigen::VectorXd difference(const Eigen::VectorXd& f, std::size_t e) const;
  /// out(x) = in(x + h v) for edge e (sign = +1) or in(x - h v) (sign = -1).
  void shift(const Eigen::VectorXd& in, std::size_t e, int sign, Eigen::VectorXd& out) const;

 private:
  std::vector<Edge> edges_;
  std::vector<double> symbol_;  // preconditioner symbol on the half spectrum
  std::unique_ptr<Multigrid> multigrid_;
};

/// Fourier collocation: gradients are spectral derivatives with the Nyquist
/// modes removed, products are taken at the nodes.
class SpectralOperator final : public CellOperator {
 public:
  /// With Preconditioner::Multigrid the finite-volume multigrid cycle is used
  /// as the (spectrally equivalent) preconditioner when the stencil allows it.
  SpectralOperator(const GridField& w, const Eigen::MatrixXd& inner, Preconditioner pre = Preconditioner::Fourier);

  void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const override;
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const override;
  Eigen::VectorXd rhs(const Eigen::VectorXd& l) const override;
  void project(Eigen::VectorXd& f) const override;
  Eigen::MatrixXd energy(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const override;
  Eigen::MatrixXd flux(const Eigen::MatrixXd& dirs, const std::vector<Eigen::VectorXd>& chi) const override;

  /// Spectral gradient, one grid vector per axis.
  std::vector<Eigen::VectorXd> gradient(const Eigen::VectorXd& f) const;
  /// Spectral divergence of a vector field.
  Eigen::VectorXd divergence(const std::vector<Eigen::VectorXd>& q) const;

 private:
  Eigen::VectorXd w_;
  Eigen::MatrixXd a_;
  std::vector<double> symbol_;
  std::unique_ptr<FiniteVolumeOperator> auxiliary_;
};

/// Preconditioned conjugate gradients for K x = b on the operator's solution
/// space. Returns iterations; throws SolverError with the residual history
/// when the relative residual does not reach tol.
int pcg_solve(const CellOperator& op, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int max_iterations,
              std::vector<double>* history = nullptr);

}  // namespace homog
