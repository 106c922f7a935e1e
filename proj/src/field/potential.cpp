#include "homog/field/potential.hpp"

#include "homog/field/measures.hpp"
#include "homog/util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace homog {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Node = PotentialExpr::Node;
using Op = PotentialExpr::Op;

Node leaf(Op op, double value) {
  Node n;
  n.op = op;
  n.value = value;
  return n;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Pow: return "pow";
  }
  return "?";
}

double checked_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw InvalidInput(std::string("potential: '") + what + "' must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw InvalidInput(std::string("potential: '") + what + "' must be finite");
  return v;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      throw InvalidInput("potential: unknown key '" + it.key() + "'");
  }
}

int parse_node(int dim, const nlohmann::json& j, std::vector<Node>& out, int depth) {
  if (depth > 256) throw InvalidInput("potential: expression nested too deeply");
  if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
    throw InvalidInput("potential: node must be an object with a string 'op'");
  const std::string op = j["op"].get<std::string>();
  Node n;
  if (op == "const") {
    require_keys(j, {"op", "value"});
    if (!j.contains("value")) throw InvalidInput("potential: const needs 'value'");
    n = leaf(Op::Const, checked_number(j["value"], "value"));
  } else if (op == "sin" || op == "cos") {
    require_keys(j, {"op", "freq", "arg"});
    n.op = op == "sin" ? Op::Sin : Op::Cos;
    const auto& f = j.contains("freq") ? j["freq"] : nlohmann::json();
    if (!f.is_array() || static_cast<int>(f.size()) != dim)
      throw InvalidInput("potential: 'freq' must be an integer array of length d = " + std::to_string(dim));
    n.freq.resize(dim);
    for (int i = 0; i < dim; ++i) {
      if (!f[i].is_number_integer()) throw InvalidInput("potential: frequencies must be integers");
      n.freq[i] = f[i].get<int>();
    }
    if (j.contains("arg") && !j["arg"].is_null()) n.arg = parse_node(dim, j["arg"], out, depth + 1);
  } else if (op == "add" || op == "mul") {
    require_keys(j, {"op", "args"});
    n.op = op == "add" ? Op::Add : Op::Mul;
    if (!j.contains("args") || !j["args"].is_array() || j["args"].empty())
      throw InvalidInput("potential: '" + op + "' needs a non-empty 'args' array");
    for (const auto& a : j["args"]) n.args.push_back(parse_node(dim, a, out, depth + 1));
  } else if (op == "scale") {
    require_keys(j, {"op", "c", "arg"});
    n.op = Op::Scale;
    if (!j.contains("c") || !j.contains("arg")) throw InvalidInput("potential: scale needs 'c' and 'arg'");
    n.value = checked_number(j["c"], "c");
    n.arg = parse_node(dim, j["arg"], out, depth + 1);
  } else if (op == "pow") {
    require_keys(j, {"op", "m", "arg"});
    n.op = Op::Pow;
    if (!j.contains("m") || !j["m"].is_number_integer() || j["m"].get<int>() < 0)
      throw InvalidInput("potential: pow needs a non-negative integer 'm'");
    if (!j.contains("arg")) throw InvalidInput("potential: pow needs 'arg'");
    n.power = j["m"].get<int>();
    n.arg = parse_node(dim, j["arg"], out, depth + 1);
  } else {
    throw InvalidInput("potential: unknown op '" + op + "'");
  }
  out.push_back(std::move(n));
  return static_cast<int>(out.size()) - 1;
}

nlohmann::json node_json(const std::vector<Node>& nodes, int i) {
  const Node& n = nodes[i];
  nlohmann::json j;
  j["op"] = op_name(n.op);
  switch (n.op) {
    case Op::Const:
      j["value"] = n.value;
      break;
    case Op::Sin:
    case Op::Cos: {
      j["freq"] = std::vector<int>(n.freq.data(), n.freq.data() + n.freq.size());
      nlohmann::json arg = n.arg >= 0 ? node_json(nodes, n.arg) : nlohmann::json();
      if (n.value != 0.0) {
        nlohmann::json phase = {{"op", "const"}, {"value", n.value}};
        arg = arg.is_null() ? phase : nlohmann::json{{"op", "add"}, {"args", {arg, phase}}};
      }
      j["arg"] = arg;
      break;
    }
    case Op::Add:
    case Op::Mul:
      j["args"] = nlohmann::json::array();
      for (int a : n.args) j["args"].push_back(node_json(nodes, a));
      break;
    case Op::Scale:
      j["c"] = n.value;
      j["arg"] = node_json(nodes, n.arg);
      break;
    case Op::Pow:
      j["m"] = n.power;
      j["arg"] = node_json(nodes, n.arg);
      break;
  }
  return j;
}

struct Scratch {
  std::vector<double> value;
  std::vector<double> grad;
};

}  // namespace

PotentialExpr::PotentialExpr(int dim, std::vector<Node> nodes) : dim_(dim), nodes_(std::move(nodes)) {
  validate();
}

void PotentialExpr::validate() const {
  if (dim_ < 1) throw InvalidInput("potential: dimension must be positive");
  if (nodes_.empty()) throw InvalidInput("potential: empty expression");
  const int count = static_cast<int>(nodes_.size());
  for (int i = 0; i < count; ++i) {
    const Node& n = nodes_[i];
    auto child_ok = [&](int c) { return c >= 0 && c < i; };
    switch (n.op) {
      case Op::Const:
        if (!std::isfinite(n.value)) throw InvalidInput("potential: non-finite constant");
        break;
      case Op::Sin:
      case Op::Cos:
        if (n.freq.size() != dim_) throw InvalidInput("potential: frequency vector has wrong dimension");
        if (n.arg != -1 && !child_ok(n.arg)) throw InvalidInput("potential: bad child index");
        if (!std::isfinite(n.value)) throw InvalidInput("potential: non-finite phase");
        break;
      case Op::Add:
      case Op::Mul:
        if (n.args.empty()) throw InvalidInput("potential: empty operand list");
        for (int a : n.args)
          if (!child_ok(a)) throw InvalidInput("potential: bad child index");
        break;
      case Op::Scale:
        if (!child_ok(n.arg) || !std::isfinite(n.value)) throw InvalidInput("potential: bad scale node");
        break;
      case Op::Pow:
        if (!child_ok(n.arg) || n.power < 0) throw InvalidInput("potential: bad pow node");
        break;
    }
  }
}

int PotentialExpr::append(std::vector<Node>& dst, const PotentialExpr& src) {
  const int base = static_cast<int>(dst.size());
  for (Node n : src.nodes_) {
    if (n.arg >= 0) n.arg += base;
    for (int& a : n.args) a += base;
    dst.push_back(std::move(n));
  }
  int root = static_cast<int>(dst.size()) - 1;
  if (src.offset_ != 0.0) {
    dst.push_back(leaf(Op::Const, -src.offset_));
    Node sum;
    sum.op = Op::Add;
    sum.args = {root, root + 1};
    dst.push_back(std::move(sum));
    root += 2;
  }
  return root;
}

PotentialExpr PotentialExpr::constant(int dim, double c) { return PotentialExpr(dim, {leaf(Op::Const, c)}); }

PotentialExpr PotentialExpr::sin(const Eigen::VectorXi& freq) {
  Node n;
  n.op = Op::Sin;
  n.freq = freq;
  return PotentialExpr(static_cast<int>(freq.size()), {n});
}

PotentialExpr PotentialExpr::cos(const Eigen::VectorXi& freq) {
  Node n;
  n.op = Op::Cos;
  n.freq = freq;
  return PotentialExpr(static_cast<int>(freq.size()), {n});
}

PotentialExpr PotentialExpr::sin(const Eigen::VectorXi& freq, const PotentialExpr& phase) {
  if (phase.dim_ != freq.size()) throw InvalidInput("potential: dimension mismatch");
  std::vector<Node> nodes;
  Node n;
  n.op = Op::Sin;
  n.freq = freq;
  n.arg = append(nodes, phase);
  nodes.push_back(n);
  return PotentialExpr(phase.dim_, std::move(nodes));
}

PotentialExpr PotentialExpr::cos(const Eigen::VectorXi& freq, const PotentialExpr& phase) {
  PotentialExpr e = sin(freq, phase);
  e.nodes_.back().op = Op::Cos;
  return e;
}

PotentialExpr PotentialExpr::sum(std::span<const PotentialExpr> terms) {
  if (terms.empty()) throw InvalidInput("potential: empty sum");
  std::vector<Node> nodes;
  Node n;
  n.op = Op::Add;
  for (const auto& t : terms) {
    if (t.dim_ != terms.front().dim_) throw InvalidInput("potential: dimension mismatch");
    n.args.push_back(append(nodes, t));
  }
  nodes.push_back(n);
  return PotentialExpr(terms.front().dim_, std::move(nodes));
}

PotentialExpr PotentialExpr::product(std::span<const PotentialExpr> factors) {
  PotentialExpr e = sum(factors);
  e.nodes_.back().op = Op::Mul;
  return e;
}

PotentialExpr PotentialExpr::scale(double c, const PotentialExpr& e) {
  std::vector<Node> nodes;
  Node n = leaf(Op::Scale, c);
  n.arg = append(nodes, e);
  nodes.push_back(n);
  return PotentialExpr(e.dim_, std::move(nodes));
}

PotentialExpr PotentialExpr::pow(const PotentialExpr& e, int m) {
  std::vector<Node> nodes;
  Node n;
  n.op = Op::Pow;
  n.power = m;
  n.arg = append(nodes, e);
  nodes.push_back(n);
  return PotentialExpr(e.dim_, std::move(nodes));
}

PotentialExpr operator+(const PotentialExpr& a, const PotentialExpr& b) {
  return PotentialExpr::sum(std::vector<PotentialExpr>{a, b});
}

PotentialExpr operator-(const PotentialExpr& a, const PotentialExpr& b) { return a + PotentialExpr::scale(-1.0, b); }

PotentialExpr operator*(const PotentialExpr& a, const PotentialExpr& b) {
  return PotentialExpr::product(std::vector<PotentialExpr>{a, b});
}

double PotentialExpr::origin_value() const {
  std::vector<double> zero(dim_, 0.0);
  return evaluate(zero.data(), nullptr);
}

PotentialExpr PotentialExpr::normalized() const {
  PotentialExpr e = *this;
  e.offset_ += origin_value();
  return e;
}

double PotentialExpr::raw_evaluate(const double* x, double* grad) const {
  thread_local Scratch s;
  const std::size_t count = nodes_.size();
  const int d = dim_;
  if (s.value.size() < count) s.value.resize(count);
  const bool want_grad = grad != nullptr;
  if (want_grad && s.grad.size() < count * d) s.grad.resize(count * d);
  double* val = s.value.data();
  double* g = s.grad.data();

  for (std::size_t i = 0; i < count; ++i) {
    const Node& n = nodes_[i];
    double* gi = want_grad ? g + i * d : nullptr;
    switch (n.op) {
      case Op::Const:
        val[i] = n.value;
        if (gi) std::fill(gi, gi + d, 0.0);
        break;
      case Op::Sin:
      case Op::Cos: {
        // Reduce k.x mod 1 before scaling so large frequencies keep precision.
        double t = 0.0;
        for (int a = 0; a < d; ++a) t += n.freq[a] * x[a];
        t -= std::floor(t);
        double phase = kTwoPi * t + n.value + (n.arg >= 0 ? val[n.arg] : 0.0);
        double sn = std::sin(phase), cs = std::cos(phase);
        double dv = n.op == Op::Sin ? cs : -sn;
        val[i] = n.op == Op::Sin ? sn : cs;
        if (gi) {
          for (int a = 0; a < d; ++a) {
            double dp = kTwoPi * n.freq[a] + (n.arg >= 0 ? g[n.arg * d + a] : 0.0);
            gi[a] = dv * dp;
          }
        }
        break;
      }
      case Op::Add:
        val[i] = 0.0;
        if (gi) std::fill(gi, gi + d, 0.0);
        for (int c : n.args) {
          val[i] += val[c];
          if (gi)
            for (int a = 0; a < d; ++a) gi[a] += g[c * d + a];
        }
        break;
      case Op::Mul: {
        double v = 1.0;
        if (gi) std::fill(gi, gi + d, 0.0);
        for (int c : n.args) {
          if (gi)
            for (int a = 0; a < d; ++a) gi[a] = gi[a] * val[c] + v * g[c * d + a];
          v *= val[c];
        }
        val[i] = v;
        break;
      }
      case Op::Scale:
        val[i] = n.value * val[n.arg];
        if (gi)
          for (int a = 0; a < d; ++a) gi[a] = n.value * g[n.arg * d + a];
        break;
      case Op::Pow: {
        double b = val[n.arg];
        double pm1 = n.power >= 1 ? std::pow(b, n.power - 1) : 0.0;
        val[i] = n.power == 0 ? 1.0 : pm1 * b;
        if (gi)
          for (int a = 0; a < d; ++a) gi[a] = n.power * pm1 * g[n.arg * d + a];
        break;
      }
    }
  }
  if (want_grad) std::copy(g + (count - 1) * d, g + count * d, grad);
  return val[count - 1];
}

double PotentialExpr::evaluate(const double* x, double* grad) const {
  if (nodes_.empty()) throw InvalidInput("potential: evaluating an empty expression");
  return raw_evaluate(x, grad) - offset_;
}

double PotentialExpr::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw InvalidInput("potential: point has wrong dimension");
  return evaluate(x.data(), nullptr);
}

double PotentialExpr::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw InvalidInput("potential: point has wrong dimension");
  Eigen::VectorXd xc = x;
  return evaluate(xc.data(), nullptr);
}

Eigen::VectorXd PotentialExpr::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw InvalidInput("potential: point has wrong dimension");
  Eigen::VectorXd xc = x, g(dim_);
  evaluate(xc.data(), g.data());
  return g;
}

Eigen::VectorXi PotentialExpr::frequency_bound() const {
  std::vector<Eigen::VectorXi> fb(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Const:
        fb[i] = Eigen::VectorXi::Zero(dim_);
        break;
      case Op::Sin:
      case Op::Cos:
        fb[i] = n.freq.cwiseAbs();
        if (n.arg >= 0) fb[i] += fb[n.arg];
        break;
      case Op::Add:
        fb[i] = Eigen::VectorXi::Zero(dim_);
        for (int c : n.args) fb[i] = fb[i].cwiseMax(fb[c]);
        break;
      case Op::Mul:
        fb[i] = Eigen::VectorXi::Zero(dim_);
        for (int c : n.args) fb[i] += fb[c];
        break;
      case Op::Scale:
        fb[i] = n.value == 0.0 ? Eigen::VectorXi::Zero(dim_) : fb[n.arg];
        break;
      case Op::Pow:
        fb[i] = fb[n.arg] * n.power;
        break;
    }
  }
  return fb.back();
}

int PotentialExpr::max_frequency() const { return frequency_bound().maxCoeff(); }

PotentialExpr PotentialExpr::scaled(long factor) const {
  if (factor < 1) throw InvalidInput("potential: scale factor must be a positive integer");
  PotentialExpr e = *this;
  for (Node& n : e.nodes_) {
    if (n.op != Op::Sin && n.op != Op::Cos) continue;
    Eigen::Matrix<long, Eigen::Dynamic, 1> k = n.freq.cast<long>() * factor;
    if (k.cwiseAbs().maxCoeff() > std::numeric_limits<int>::max())
      throw BudgetError("potential: rescaled frequency overflows");
    n.freq = k.cast<int>();
  }
  return e;
}

PotentialExpr PotentialExpr::translated(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (y.size() != dim_) throw InvalidInput("potential: shift has wrong dimension");
  PotentialExpr e = *this;
  for (Node& n : e.nodes_) {
    if (n.op != Op::Sin && n.op != Op::Cos) continue;
    double t = n.freq.cast<double>().dot(y);
    n.value = std::remainder(n.value + kTwoPi * (t - std::floor(t)), kTwoPi);
  }
  return e;
}

nlohmann::json PotentialExpr::to_json() const {
  nlohmann::json root = node_json(nodes_, static_cast<int>(nodes_.size()) - 1);
  if (offset_ == 0.0) return root;
  return {{"op", "add"}, {"args", {root, {{"op", "const"}, {"value", -offset_}}}}};
}

PotentialExpr PotentialExpr::from_json(int dim, const nlohmann::json& j, bool normalize) {
  if (dim < 1) throw InvalidInput("potential: dimension must be positive");
  std::vector<Node> nodes;
  parse_node(dim, j, nodes, 0);
  PotentialExpr e(dim, std::move(nodes));
  return normalize ? e.normalized() : e;
}

namespace potentials {

PotentialExpr sine(int dim, int axis, int k, double amplitude) {
  if (axis < 0 || axis >= dim) throw InvalidInput("potential: axis out of range");
  Eigen::VectorXi f = Eigen::VectorXi::Zero(dim);
  f[axis] = k;
  return PotentialExpr::scale(amplitude, PotentialExpr::sin(f));
}

PotentialExpr figure_one() {
  using E = PotentialExpr;
  const double pi = std::numbers::pi;
  auto v = [](int a, int b) { return Eigen::Vector2i(a, b).eval(); };
  Eigen::VectorXi kx = v(1, 0), ky = v(0, 1);
  // x -> 2 pi u, y -> 2 pi v on the unit torus.
  E f1 = E::pow(E::cos(kx, pi * E::sin(ky) + E::constant(2, 1.0)), 2);
  E f2 = E::sin(v(0, -2), pi * E::cos(kx) + E::constant(2, 2.0));
  E f3 = E::cos(ky, pi * E::sin(kx));
  return E::product(std::vector<E>{f1, f2, f3}).normalized();
}

PotentialExpr exceptional_ratio(double amplitude) {
  Eigen::VectorXi k1(1), k81(1);
  k1 << 1;
  k81 << 81;
  return (amplitude * (PotentialExpr::sin(k1) - PotentialExpr::sin(k81))).normalized();
}

PotentialExpr random_trig(int dim, int terms, int max_freq, double target_osc, unsigned long long seed) {
  if (dim < 1 || terms < 1 || max_freq < 1) throw InvalidInput("random_trig: bad parameters");
  std::mt19937_64 gen(seed);
  auto unit = [&] { return (gen() >> 11) * 0x1.0p-53; };
  std::vector<PotentialExpr> parts;
  for (int t = 0; t < terms; ++t) {
    Eigen::VectorXi k(dim);
    do {
      for (int a = 0; a < dim; ++a)
        k[a] = static_cast<int>(gen() % (2 * max_freq + 1)) - max_freq;
    } while (k.cwiseAbs().maxCoeff() == 0);
    double amp = 0.2 + unit();
    double phase = kTwoPi * unit();
    parts.push_back(amp * PotentialExpr::sin(k, PotentialExpr::constant(dim, phase)));
  }
  PotentialExpr u = PotentialExpr::sum(parts).normalized();
  double osc = oscillation(u).value;
  if (target_osc <= 0.0 || osc <= 0.0) return PotentialExpr::zero(dim);
  return PotentialExpr::scale(target_osc / osc, u).normalized();
}

}  // namespace potentials

}  // namespace homog
