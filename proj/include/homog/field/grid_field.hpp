#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <string>

namespace homog {

class PotentialExpr;

/// Regular periodic grid on the unit torus: N nodes per axis at j/N, row-major
/// (axis 0 slowest).
struct GridShape {
  int dim = 1;
  int n = 4;

  std::size_t size() const noexcept;
  double spacing() const noexcept { return 1.0 / n; }
  std::size_t stride(int axis) const noexcept;
  /// Multi-index of a flat index.
  std::array<int, 3> unflatten(std::size_t flat) const noexcept;
  std::size_t flatten(const std::array<int, 3>& idx) const noexcept;

  bool operator==(const GridShape&) const = default;
};

/// Samples of a periodic field at the nodes of a GridShape.
struct GridField {
  GridShape shape;
  Eigen::VectorXd samples;

  GridField() = default;
  GridField(GridShape s, Eigen::VectorXd v);
  explicit GridField(GridShape s);

  int dimension() const noexcept { return shape.dim; }
  int resolution() const noexcept { return shape.n; }
  double mean() const { return samples.mean(); }

  /// Keeps every factor-th node along each axis.
  GridField decimated(int factor) const;
  /// Field translated by whole grid cells: result(x) = f(x + offset h).
  GridField shifted(const std::array<int, 3>& offset) const;

  /// Flat little-endian float64 dump plus a JSON sidecar {"d","N","layout"}.
  void write(const std::string& stem) const;
  static GridField read(const std::string& stem);
};

bool is_power_of_two(long n) noexcept;
long next_power_of_two(long n) noexcept;

/// Samples expr at the nodes j/N. N must be a power of two >= 4.
GridField sample_grid(const PotentialExpr& expr, int n);
GridField sample_grid(int dim, int n, const std::function<double(const double*)>& f);

/// dst(x) = src(x + offset) with periodic wrap, offsets in grid cells.
void periodic_roll(const GridShape& shape, const double* src, const std::array<int, 3>& offset, double* dst);

}  // namespace homog
