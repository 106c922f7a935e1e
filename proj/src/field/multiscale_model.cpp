#include "homog/field/multiscale_model.hpp"

#include "homog/field/measures.hpp"
#include "homog/util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace homog {

MultiscaleModel::MultiscaleModel(std::vector<PotentialExpr> scales, std::vector<long> ratios, double alpha)
    : scales_(std::move(scales)), ratios_(std::move(ratios)), alpha_(alpha) {
  if (scales_.empty()) throw InvalidInput("model: at least one scale is required");
  if (ratios_.size() + 1 != scales_.size()) throw InvalidInput("model: need one ratio per scale after the first");
  if (!(alpha_ > 0.0 && alpha_ <= 1.0)) throw InvalidInput("model: alpha must lie in (0, 1]");
  const int d = scales_.front().dimension();
  for (const auto& u : scales_)
    if (u.dimension() != d) throw InvalidInput("model: all scales must share the dimension");
  periods_.assign(1, 1);
  for (long r : ratios_) {
    if (r < 2) throw InvalidInput("model: scale ratios must be integers >= 2");
    if (periods_.back() > std::numeric_limits<long>::max() / r) throw BudgetError("model: period R_n overflows");
    periods_.push_back(periods_.back() * r);
  }
}

MultiscaleModel MultiscaleModel::self_similar(const PotentialExpr& u, long rho, int n, double alpha) {
  if (n < 0) throw InvalidInput("model: n must be non-negative");
  return MultiscaleModel(std::vector<PotentialExpr>(n + 1, u), std::vector<long>(n, rho), alpha);
}

long MultiscaleModel::rho_min() const {
  return ratios_.empty() ? 0 : *std::min_element(ratios_.begin(), ratios_.end());
}

long MultiscaleModel::rho_max() const {
  return ratios_.empty() ? 0 : *std::max_element(ratios_.begin(), ratios_.end());
}

namespace {

// Max of a probe over the distinct scales; self-similar models probe once.
template <class Probe>
double max_over_distinct(const std::vector<PotentialExpr>& scales, Probe probe) {
  std::set<std::string> seen;
  double k = 0;
  for (const auto& u : scales)
    if (seen.insert(u.to_json().dump()).second) k = std::max(k, probe(u));
  return k;
}

}  // namespace

double MultiscaleModel::k0() const {
  return max_over_distinct(scales_, [](const PotentialExpr& u) { return oscillation(u).value; });
}

double MultiscaleModel::k_alpha() const {
  return max_over_distinct(scales_, [this](const PotentialExpr& u) { return holder_seminorm(u, alpha_).value; });
}

MultiscaleModel MultiscaleModel::truncated(int n) const {
  if (n < 0 || n >= scale_count()) throw InvalidInput("model: truncation index out of range");
  return MultiscaleModel(std::vector<PotentialExpr>(scales_.begin(), scales_.begin() + n + 1),
                         std::vector<long>(ratios_.begin(), ratios_.begin() + n), alpha_);
}

double MultiscaleModel::evaluate(int p, int n, const double* x, double* grad) const {
  if (p < 0 || p > n || n >= scale_count()) throw InvalidInput("model: scale range out of bounds");
  const int d = dimension();
  double y[3], g[3];
  if (d > 3) throw InvalidInput("model: evaluation supports d <= 3");
  double v = 0;
  if (grad) std::fill(grad, grad + d, 0.0);
  for (int k = p; k <= n; ++k) {
    const double inv = 1.0 / static_cast<double>(periods_[k]);
    for (int a = 0; a < d; ++a) y[a] = x[a] * inv;
    v += scales_[k].evaluate(y, grad ? g : nullptr);
    if (grad)
      for (int a = 0; a < d; ++a) grad[a] += g[a] * inv;
  }
  return v;
}

double MultiscaleModel::evaluate(int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd xc = x;
  if (xc.size() != dimension()) throw InvalidInput("model: point has wrong dimension");
  return evaluate(p, n, xc.data(), nullptr);
}

Eigen::VectorXd MultiscaleModel::gradient(int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd xc = x, g(dimension());
  if (xc.size() != dimension()) throw InvalidInput("model: point has wrong dimension");
  evaluate(p, n, xc.data(), g.data());
  return g;
}

PotentialExpr MultiscaleModel::unit_torus_potential(int n) const {
  if (n < 0 || n >= scale_count()) throw InvalidInput("model: scale index out of range");
  std::vector<PotentialExpr> terms;
  for (int k = 0; k <= n; ++k) terms.push_back(scales_[k].scaled(periods_[n] / periods_[k]));
  return PotentialExpr::sum(terms);
}

nlohmann::json MultiscaleModel::to_json() const {
  nlohmann::json scales = nlohmann::json::array();
  for (int k = 0; k < scale_count(); ++k) {
    nlohmann::json s{{"U", scales_[k].to_json()}};
    if (k > 0) s["r"] = ratios_[k - 1];
    scales.push_back(s);
  }
  return {{"d", dimension()}, {"alpha", alpha_}, {"scales", scales}};
}

MultiscaleModel MultiscaleModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("model: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "d" && it.key() != "alpha" && it.key() != "scales")
      throw InvalidInput("model: unknown key '" + it.key() + "'");
  if (!j.contains("d") || !j["d"].is_number_integer()) throw InvalidInput("model: 'd' must be an integer");
  if (!j.contains("scales") || !j["scales"].is_array() || j["scales"].empty())
    throw InvalidInput("model: 'scales' must be a non-empty array");
  const int d = j["d"].get<int>();
  double alpha = 1.0;
  if (j.contains("alpha")) {
    if (!j["alpha"].is_number()) throw InvalidInput("model: 'alpha' must be a number");
    alpha = j["alpha"].get<double>();
  }
  std::vector<PotentialExpr> scales;
  std::vector<long> ratios;
  for (std::size_t k = 0; k < j["scales"].size(); ++k) {
    const auto& s = j["scales"][k];
    if (!s.is_object() || !s.contains("U")) throw InvalidInput("model: each scale needs 'U'");
    for (auto it = s.begin(); it != s.end(); ++it)
      if (it.key() != "U" && it.key() != "r") throw InvalidInput("model: unknown scale key '" + it.key() + "'");
    scales.push_back(PotentialExpr::from_json(d, s["U"]));
    if (k == 0) {
      if (s.contains("r")) throw InvalidInput("model: the first scale takes no ratio");
    } else {
      if (!s.contains("r") || !s["r"].is_number_integer()) throw InvalidInput("model: scale ratio 'r' must be an integer");
      ratios.push_back(s["r"].get<long>());
    }
  }
  return MultiscaleModel(std::move(scales), std::move(ratios), alpha);
}

double multiscale_evaluate(const MultiscaleModel& model, int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return model.evaluate(p, n, x);
}

Eigen::VectorXd multiscale_gradient(const MultiscaleModel& model, int p, int n, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return model.gradient(p, n, x);
}

}  // namespace homog
