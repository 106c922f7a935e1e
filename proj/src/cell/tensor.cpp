#include "homog/cell/tensor.hpp"

#include "homog/util/errors.hpp"

namespace homog {

EffectiveTensor make_tensor(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw InvalidInput("tensor: matrix must be square and non-empty");
  EffectiveTensor t;
  t.matrix = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.matrix);
  t.eigenvalues = es.eigenvalues();
  t.eigenvectors = es.eigenvectors();
  return t;
}

FormBounds form_bounds(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), 0.5 * (b + b.transpose()));
  if (es.info() != Eigen::Success) throw SolverError("form_bounds: reference form is not positive definite", {});
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

nlohmann::json EffectiveTensor::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < matrix.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < matrix.cols(); ++j) row.push_back(matrix(i, j));
    rows.push_back(row);
  }
  std::vector<double> eigs(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  return {{"d", dimension()}, {"matrix", rows},          {"eigs", eigs},
          {"residual", residual}, {"N", resolution}, {"iterations", iterations}, {"asymmetry", asymmetry}};
}

EffectiveTensor EffectiveTensor::from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("d").get<int>();
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) m(i, k) = j.at("matrix").at(i).at(k).get<double>();
    EffectiveTensor t = make_tensor(m);
    t.residual = j.value("residual", 0.0);
    t.resolution = j.value("N", 0);
    t.iterations = j.value("iterations", 0);
    t.asymmetry = j.value("asymmetry", 0.0);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("tensor: malformed JSON: ") + e.what());
  }
}

}  // namespace homog
