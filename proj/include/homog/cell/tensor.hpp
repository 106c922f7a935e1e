#pragma once

#include <Eigen/Dense>
#include <json.hpp>

namespace homog {

/// Symmetric positive-definite effective tensor with its spectrum.
struct EffectiveTensor {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, matching eigenvalues
  double residual = 0.0;         // worst relative solver residual
  double asymmetry = 0.0;        // flux-form asymmetry before symmetrizing
  int resolution = 0;
  int iterations = 0;

  int dimension() const noexcept { return static_cast<int>(matrix.rows()); }
  double lambda_min() const { return eigenvalues.minCoeff(); }
  double lambda_max() const { return eigenvalues.maxCoeff(); }

  nlohmann::json to_json() const;
  static EffectiveTensor from_json(const nlohmann::json& j);
};

/// Symmetrizes m and attaches its eigen decomposition.
EffectiveTensor make_tensor(const Eigen::MatrixXd& m);

/// Smallest f_minus, largest-needed f_plus with f_minus B <= A <= f_plus B as
/// quadratic forms (generalized eigenvalues of the pencil (A, B)).
struct FormBounds {
  double lower = 1.0;
  double upper = 1.0;
};
FormBounds form_bounds(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace homog
