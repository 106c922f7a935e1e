#pragma once

#include "homog/field/grid_field.hpp"
#include "homog/field/multiscale_model.hpp"
#include "homog/sde/random.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace homog::detail {

// Per-path cache of the current Philox block.
struct StepState {
  std::uint64_t block = ~std::uint64_t{0};
  double z[4] = {0, 0, 0, 0};
  double u[2] = {0, 0};
};

// One Euler-Maruyama step y <- y - s grad V(y) dt + sqrt(dt) z with the noise
// of (path, step) drawn from Philox; `bridge_u` receives a spare uniform of
// the same block. In d = 1 one block serves two consecutive steps and the
// drift comes from per-scale tables of U_k' with four-point Lagrange
// interpolation (256 nodes per oscillation, relative error ~1e-8).
class Stepper {
 public:
  Stepper(const MultiscaleModel& v, double dt, double drift_sign, std::uint64_t seed)
      : v_(v), top_(v.scale_count() - 1), d_(v.dimension()), dt_(dt), sqdt_(std::sqrt(dt)),
        drift_(drift_sign * dt), key_(Philox4x32::key_of(seed)) {
    if (d_ == 1) build_tables();
  }

  int dimension() const noexcept { return d_; }
  double dt() const noexcept { return dt_; }

  void step(double* y, StepState& st, std::uint64_t path, std::uint64_t k, double* bridge_u) const {
    if (d_ == 1) {
      const std::uint64_t block = k >> 1;
      if (st.block != block) {
        auto w = Philox4x32::generate(StreamCounter::make(path, block, 0, false), key_);
        auto z = normal_pair(w[0], w[1]);
        st = {block, {z[0], z[1], 0, 0}, {uniform_closed0(w[2]), uniform_closed0(w[3])}};
      }
      const int half = static_cast<int>(k & 1);
      y[0] += sqdt_ * st.z[half] - drift_ * gradient_1d(y[0]);
      if (bridge_u) *bridge_u = st.u[half];
      return;
    }
    double g[3];
    v_.evaluate(0, top_, y, g);
    auto w = Philox4x32::generate(StreamCounter::make(path, k, 0, false), key_);
    auto z = normal_pair(w[0], w[1]);
    y[0] += sqdt_ * z[0] - drift_ * g[0];
    y[1] += sqdt_ * z[1] - drift_ * g[1];
    if (d_ == 3) {
      auto w2 = Philox4x32::generate(StreamCounter::make(path, k, 1, false), key_);
      y[2] += sqdt_ * normal_pair(w2[0], w2[1])[0] - drift_ * g[2];
    }
    if (bridge_u) *bridge_u = uniform_closed0(w[2]);
  }

  double gradient_1d(double x) const {
    double g = 0;
    for (const auto& s : scales_) {
      const double t = x * s.scaled_inv_period;
      auto i = static_cast<std::int64_t>(t);
      i -= static_cast<std::int64_t>(t < static_cast<double>(i));
      const double f = t - static_cast<double>(i);
      // Nodes i-1..i+2 live at data[i..i+3] (one guard node on the left).
      const double* p = s.data + (i & s.mask);
      const double fm = f - 1, fp = f + 1, f2 = f - 2;
      const double a = f * fm, b = fp * f2;
      g += s.inv_period * ((p[3] * fp - p[0] * f2) * a * (1.0 / 6) + (p[1] * fm - p[2] * f) * b * 0.5);
    }
    return g;
  }

 private:
  struct Scale {
    double inv_period = 1.0;
    double scaled_inv_period = 1.0;  // table nodes per unit length
    std::int64_t mask = 0;
    const double* data = nullptr;
  };

  void build_tables() {
    std::map<std::string, std::shared_ptr<const std::vector<double>>> cache;
    for (int k = 0; k <= top_; ++k) {
      const PotentialExpr& u = v_.scale(k);
      const int f = u.max_frequency();
      if (f > 0) {
        const std::string key = u.to_json().dump();
        auto it = cache.find(key);
        if (it == cache.end()) {
          const long n = std::max(1024L, next_power_of_two(256L * f));
          auto tab = std::make_shared<std::vector<double>>(n + 3);
          for (long j = -1; j <= n + 1; ++j) {
            double x = static_cast<double>(j) / n, g = 0;
            u.evaluate(&x, &g);
            (*tab)[j + 1] = g;
          }
          it = cache.emplace(key, tab).first;
        }
        Scale s;
        s.inv_period = 1.0 / static_cast<double>(v_.period(k));
        s.scaled_inv_period = s.inv_period * static_cast<double>(it->second->size() - 3);
        s.mask = static_cast<std::int64_t>(it->second->size() - 4);
        s.data = it->second->data();
        scales_.push_back(s);
        tables_.push_back(it->second);
      }
    }
  }

  const MultiscaleModel& v_;
  int top_;
  int d_;
  double dt_;
  double sqdt_;
  double drift_;
  Philox4x32::Key key_;
  std::vector<Scale> scales_;  // non-constant scales only
  std::vector<std::shared_ptr<const std::vector<double>>> tables_;
};

}  // namespace homog::detail
