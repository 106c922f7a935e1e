#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <span>
#include <vector>

namespace homog {

/// Closed-form periodic potential on the unit torus R^d / Z^d.
///
/// The grammar is
///   const c | sin(2*pi k.x + E) | cos(2*pi k.x + E) | E1 + E2 + ... |
///   E1 * E2 * ... | c * E | E^m
/// with integer wave vectors k, so every expression is exactly 1-periodic in
/// each coordinate. Nodes are stored flattened in post-order; the root is the
/// last node.
///
/// The builders below are exact algebra on values. Potentials parsed from JSON
/// and the named factories are normalized so that U(0) = 0 (the origin value
/// is subtracted); normalized() does the same for hand-built trees. Additive
/// constants are kept by the builders because the pressure functional depends
/// on them.
class PotentialExpr {
 public:
  enum class Op { Const, Sin, Cos, Add, Mul, Scale, Pow };

  struct Node {
    Op op = Op::Const;
    double value = 0.0;         // Const: c, Scale: c, Sin / Cos: constant phase
    int power = 1;              // Pow
    Eigen::VectorXi freq;       // Sin / Cos
    int arg = -1;               // Sin / Cos (optional), Scale, Pow
    std::vector<int> args;      // Add / Mul
  };

  PotentialExpr() = default;

  // Leaf / composite builders. All operands must share the same dimension.
  static PotentialExpr constant(int dim, double c);
  static PotentialExpr zero(int dim) { return constant(dim, 0.0); }
  static PotentialExpr sin(const Eigen::VectorXi& freq);
  static PotentialExpr cos(const Eigen::VectorXi& freq);
  static PotentialExpr sin(const Eigen::VectorXi& freq, const PotentialExpr& phase);
  static PotentialExpr cos(const Eigen::VectorXi& freq, const PotentialExpr& phase);
  static PotentialExpr sum(std::span<const PotentialExpr> terms);
  static PotentialExpr product(std::span<const PotentialExpr> factors);
  static PotentialExpr scale(double c, const PotentialExpr& e);
  static PotentialExpr pow(const PotentialExpr& e, int m);

  /// Same function minus its value at the origin.
  PotentialExpr normalized() const;
  double origin_value() const;

  int dimension() const noexcept { return dim_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  double operator()(std::span<const double> x) const;
  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Value and gradient at x (length d). grad may be null.
  double evaluate(const double* x, double* grad) const;

  /// Per-axis bound on the largest Fourier index produced by the tree
  /// (|k| for trigonometric leaves, summed through products and powers).
  Eigen::VectorXi frequency_bound() const;
  int max_frequency() const;

  /// U(R x) for a positive integer R.
  PotentialExpr scaled(long factor) const;
  /// U(x + y).
  PotentialExpr translated(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  PotentialExpr operator-() const { return scale(-1.0, *this); }
  friend PotentialExpr operator+(const PotentialExpr& a, const PotentialExpr& b);
  friend PotentialExpr operator-(const PotentialExpr& a, const PotentialExpr& b);
  friend PotentialExpr operator*(const PotentialExpr& a, const PotentialExpr& b);
  friend PotentialExpr operator*(double c, const PotentialExpr& e) { return scale(c, e); }

  nlohmann::json to_json() const;
  /// Parses the JSON grammar. Throws InvalidInput on malformed trees.
  static PotentialExpr from_json(int dim, const nlohmann::json& j, bool normalize = true);

 private:
  PotentialExpr(int dim, std::vector<Node> nodes);
  double raw_evaluate(const double* x, double* grad) const;
  void validate() const;
  static int append(std::vector<Node>& dst, const PotentialExpr& src);

  int dim_ = 0;
  std::vector<Node> nodes_;
  double offset_ = 0.0;  // subtracted from the raw tree value
};

namespace potentials {

/// a * sin(2 pi k x) in dimension d along the given axis.
PotentialExpr sine(int dim, int axis, int k, double amplitude = 1.0);

/// The two-dimensional test potential
///   cos(x + pi sin y + 1)^2 sin(pi cos x - 2y + 2) cos(pi sin x + y)
/// read on [0, 2pi]^2 and rescaled to the unit torus.
PotentialExpr figure_one();

/// a * (sin(2 pi x) - sin(2 pi 81 x)) in d = 1.
PotentialExpr exceptional_ratio(double amplitude = 0.5);

/// Random trigonometric polynomial with integer frequencies |k_i| <= max_freq,
/// rescaled so that its probe oscillation equals target_osc.
PotentialExpr random_trig(int dim, int terms, int max_freq, double target_osc, unsigned long long seed);

}  // namespace potentials

}  // namespace homog
