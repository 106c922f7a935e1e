#pragma once

#include "homog/field/grid_field.hpp"

#include <Eigen/Dense>

#include <vector>

namespace homog {

/// Periodic operator with a compact {-1,0,1}^d stencil per node, stored as
/// coefficients[node * 3^d + offset] with offset digits (delta_a + 1) in base 3,
/// axis 0 most significant.
struct NodeStencil {
  GridShape shape;
  int width = 3;  // 3^d
  std::vector<double> coefficients;

  void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const;
};

/// Symmetric V-cycle (forward Gauss-Seidel before, backward after) with
/// bilinear interpolation and Galerkin coarse operators, down to a 4^d grid
/// solved by pseudo-inverse. Used as a CG preconditioner; d <= 2.
class Multigrid {
 public:
  explicit Multigrid(NodeStencil fine, int smoothing_steps = 2);

  /// z ~ A^+ r on the mean-zero subspace.
  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;
  int levels() const noexcept { return static_cast<int>(levels_.size()); }

 private:
  void cycle(std::size_t level, const Eigen::VectorXd& b, Eigen::VectorXd& x) const;
  void smooth(const NodeStencil& a, const Eigen::VectorXd& b, Eigen::VectorXd& x, bool forward) const;

  std::vector<NodeStencil> levels_;
  Eigen::MatrixXd coarse_pinv_;
  int smoothing_steps_;
};

}  // namespace homog
