#include "homog/runner/config.hpp"

#include "homog/util/errors.hpp"
#include "homog/util/hash.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace homog {

namespace {

using json = nlohmann::json;

enum class Kind { Int, UInt, Number, Bool, String, NumberList, IntList, PointList, Any };

struct Field {
  const char* key;
  Kind kind;
  json fallback;  // null: required
};

using Schema = std::vector<Field>;

bool matches(Kind k, const json& v) {
  auto number_list = [](const json& a) {
    if (!a.is_array()) return false;
    for (const auto& x : a)
      if (!x.is_number()) return false;
    return true;
  };
  switch (k) {
    case Kind::Int: return v.is_number_integer();
    case Kind::UInt: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    case Kind::Number: return v.is_number();
    case Kind::Bool: return v.is_boolean();
    case Kind::String: return v.is_string();
    case Kind::NumberList: return number_list(v);
    case Kind::IntList:
      if (!v.is_array()) return false;
      for (const auto& x : v)
        if (!x.is_number_integer()) return false;
      return true;
    case Kind::PointList:
      if (!v.is_array()) return false;
      for (const auto& x : v)
        if (!number_list(x)) return false;
      return true;
    case Kind::Any: return true;
  }
  return false;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Int: return "an integer";
    case Kind::UInt: return "a non-negative integer";
    case Kind::Number: return "a number";
    case Kind::Bool: return "a boolean";
    case Kind::String: return "a string";
    case Kind::NumberList: return "a list of numbers";
    case Kind::IntList: return "a list of integers";
    case Kind::PointList: return "a list of points";
    case Kind::Any: return "any value";
  }
  return "";
}

// Checks keys and types, fills defaults. `where` prefixes error messages.
json apply_schema(const json& given, const Schema& schema, const std::string& where) {
  if (!given.is_null() && !given.is_object()) throw InvalidInput(where + ": expected an object");
  json out = json::object();
  std::set<std::string> known;
  for (const auto& f : schema) known.insert(f.key);
  if (given.is_object())
    for (auto it = given.begin(); it != given.end(); ++it)
      if (!known.count(it.key())) throw InvalidInput(where + ": unknown key '" + it.key() + "'");
  for (const auto& f : schema) {
    if (given.is_object() && given.contains(f.key)) {
      const json& v = given[f.key];
      if (!matches(f.kind, v)) throw InvalidInput(where + "." + f.key + " must be " + kind_name(f.kind));
      out[f.key] = v;
    } else if (f.fallback.is_null() && f.kind != Kind::Any) {
      throw InvalidInput(where + ": missing required key '" + f.key + "'");
    } else {
      out[f.key] = f.fallback;
    }
  }
  return out;
}

const Schema& solver_schema() {
  static const Schema s = {
      {"tolerance", Kind::Number, 1e-9},
      {"max_iterations", Kind::Int, 20000},
      {"points_per_oscillation", Kind::Int, 16},
      {"resolution", Kind::Int, 0},
      {"discretization", Kind::String, "finite-volume"},
      {"preconditioner", Kind::String, "fourier"},
      {"max_points", Kind::UInt, std::size_t{1} << 24},
  };
  return s;
}

const Schema& sde_schema() {
  static const Schema s = {
      {"dt", Kind::Number, 0.0},
      {"paths", Kind::UInt, 10000},
      {"c1", Kind::Number, 0.01},
      {"c2", Kind::Number, 0.01},
      {"bridge", Kind::Bool, true},
      {"censor_factor", Kind::Number, 1e4},
      {"max_censored_fraction", Kind::Number, 0.01},
      {"drift_sign", Kind::Number, 1.0},
  };
  return s;
}

const Schema& params_schema(const std::string& command) {
  static const std::map<std::string, Schema> all = {
      {"diffusivity", {{"level", Kind::Int, -1}}},
      {"two-scale",
       {{"ratios", Kind::IntList, json::array({2, 4, 8, 16})},
        {"translation_ratio", Kind::Int, 0},
        {"translation_shifts", Kind::PointList, json::array()}}},
      {"scan", {{"n_max", Kind::Int, -1}}},
      {"pressure",
       {{"rho", Kind::Int, json()},
        {"q", Kind::Int, 8},
        {"n_cap", Kind::Int, 14},
        {"max_points", Kind::UInt, std::size_t{1} << 24},
        {"cocycle_n_max", Kind::Int, 0},
        {"cocycle_threshold", Kind::Number, 0.02}}},
      {"exit",
       {{"radii", Kind::NumberList, json()},
        {"center", Kind::NumberList, json::array()},
        {"start", Kind::Any, "gibbs-ball"},
        {"windows", Kind::Bool, true}}},
      {"tail",
       {{"start", Kind::NumberList, json::array()},
        {"times", Kind::NumberList, json()},
        {"radii", Kind::NumberList, json()},
        {"window_nu", Kind::Any, json()},
        {"c10", Kind::Number, 1.0},
        {"c11", Kind::Number, 1.0},
        {"min_hits", Kind::UInt, 10}}},
      {"verify", {{"tier", Kind::String, "fast"}, {"drift_sign", Kind::Number, 1.0}, {"only", Kind::IntList, json::array()}}},
  };
  auto it = all.find(command);
  if (it == all.end()) throw InvalidInput("config: unknown command '" + command + "'");
  return it->second;
}

bool uses_model(const std::string& c) { return c != "verify"; }
bool uses_solver(const std::string& c) { return c == "diffusivity" || c == "two-scale" || c == "scan" || c == "exit"; }
bool uses_sde(const std::string& c) { return c == "exit" || c == "tail"; }

json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(std::string(what) + ": cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string(what) + ": '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

MultiscaleModel resolve_model(const json& ref, const std::filesystem::path& base_dir) {
  if (ref.is_string()) {
    std::filesystem::path p = ref.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return MultiscaleModel::from_json(read_json_file(p, "model"));
  }
  if (ref.is_object() && ref.contains("bundled")) return bundled_model(ref);
  if (ref.is_object()) return MultiscaleModel::from_json(ref);
  throw InvalidInput("config: 'model' must be an object or a file path");
}

void check_params(const std::string& command, const json& p, const MultiscaleModel* model) {
  auto positive_list = [](const json& a, const char* key) {
    if (a.empty()) throw InvalidInput(std::string("params.") + key + " must not be empty");
    for (const auto& x : a)
      if (!(x.get<double>() > 0)) throw InvalidInput(std::string("params.") + key + " must be positive");
  };
  const int d = model ? model->dimension() : 0;
  auto point = [&](const json& a, const char* key) {
    if (!a.empty() && static_cast<int>(a.size()) != d)
      throw InvalidInput(std::string("params.") + key + " must have " + std::to_string(d) + " coordinates");
  };
  if (command == "exit") {
    positive_list(p["radii"], "radii");
    point(p["center"], "center");
    const json& s = p["start"];
    if (s.is_string()) {
      if (s != "gibbs-ball") throw InvalidInput("params.start must be \"gibbs-ball\" or a point");
    } else if (matches(Kind::NumberList, s)) {
      point(s, "start");
      if (s.empty()) throw InvalidInput("params.start must not be empty");
    } else {
      throw InvalidInput("params.start must be \"gibbs-ball\" or a point");
    }
  } else if (command == "tail") {
    positive_list(p["times"], "times");
    positive_list(p["radii"], "radii");
    point(p["start"], "start");
    if (!p["window_nu"].is_null() && !p["window_nu"].is_number())
      throw InvalidInput("params.window_nu must be a number or null");
  } else if (command == "pressure") {
    if (p["rho"].get<long>() < 2) throw InvalidInput("params.rho must be >= 2");
  } else if (command == "two-scale") {
    if (model && model->scale_count() != 2)
      throw InvalidInput("two-scale: the model needs exactly two scales (fast U, slow T)");
    if (p["ratios"].empty()) throw InvalidInput("params.ratios must not be empty");
    if (p["translation_ratio"].get<long>() != 0)
      for (const auto& y : p["translation_shifts"]) point(y, "translation_shifts");
  } else if (command == "verify") {
    const auto t = p["tier"].get<std::string>();
    if (t != "fast" && t != "full") throw InvalidInput("params.tier must be \"fast\" or \"full\"");
  } else if (command == "diffusivity" || command == "scan") {
    const char* key = command == "scan" ? "n_max" : "level";
    const int v = p[key].get<int>();
    if (model && (v < -1 || v >= model->scale_count()))
      throw InvalidInput(std::string("params.") + key + " out of range");
  }
}

}  // namespace

json ExperimentConfig::resolved() const {
  json j = {{"command", command}, {"seed", seed}, {"params", params}};
  if (!model.is_null()) j["model"] = model;
  if (!solver.is_null()) j["solver"] = solver;
  if (!sde.is_null()) j["sde"] = sde;
  return j;
}

std::string ExperimentConfig::hash() const { return content_hash(resolved().dump()); }

ExperimentConfig parse_config(const json& raw, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override) {
  // A manifest carries its resolved config.
  const json& j = raw.is_object() && raw.contains("resolved_config") ? raw["resolved_config"] : raw;
  if (!j.is_object()) throw InvalidInput("config: expected a JSON object");
  static const std::set<std::string> top = {"command", "model", "seed", "solver", "sde", "params"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!top.count(it.key())) throw InvalidInput("config: unknown key '" + it.key() + "'");
  if (!j.contains("command") || !j["command"].is_string()) throw InvalidInput("config: 'command' must be a string");

  ExperimentConfig c;
  c.command = j["command"].get<std::string>();
  const Schema& ps = params_schema(c.command);

  if (seed_override) {
    c.seed = *seed_override;
  } else if (j.contains("seed")) {
    if (!matches(Kind::UInt, j["seed"])) throw InvalidInput("config: 'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  } else {
    throw InvalidInput("config: 'seed' is required (or pass --seed)");
  }

  std::optional<MultiscaleModel> model;
  if (uses_model(c.command)) {
    if (!j.contains("model")) throw InvalidInput("config: 'model' is required for " + c.command);
    model = resolve_model(j["model"], base_dir);
    c.model = model->to_json();
  } else if (j.contains("model")) {
    throw InvalidInput("config: " + c.command + " takes no model");
  }
  if (uses_solver(c.command)) {
    c.solver = apply_schema(j.value("solver", json()), solver_schema(), "solver");
    solver_config(c.solver).validate();
  } else if (j.contains("solver")) {
    throw InvalidInput("config: " + c.command + " takes no solver block");
  }
  if (uses_sde(c.command)) {
    c.sde = apply_schema(j.value("sde", json()), sde_schema(), "sde");
    sde_config(c.sde, c.seed).validate();
  } else if (j.contains("sde")) {
    throw InvalidInput("config: " + c.command + " takes no sde block");
  }
  c.params = apply_schema(j.value("params", json()), ps, "params");
  check_params(c.command, c.params, model ? &*model : nullptr);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return parse_config(read_json_file(path, "config"), path.parent_path(), seed_override);
}

MultiscaleModel bundled_model(const json& ref) {
  static const std::set<std::string> keys = {"bundled", "rho", "n", "amplitude"};
  for (auto it = ref.begin(); it != ref.end(); ++it)
    if (!keys.count(it.key())) throw InvalidInput("model: unknown bundled key '" + it.key() + "'");
  if (!ref["bundled"].is_string()) throw InvalidInput("model: 'bundled' must be a name");
  const auto name = ref["bundled"].get<std::string>();
  auto get_int = [&](const char* key, long fallback) {
    if (!ref.contains(key)) return fallback;
    if (!ref[key].is_number_integer()) throw InvalidInput(std::string("model: '") + key + "' must be an integer");
    return ref[key].get<long>();
  };
  double amplitude = 0.5;
  if (ref.contains("amplitude")) {
    if (!ref["amplitude"].is_number()) throw InvalidInput("model: 'amplitude' must be a number");
    amplitude = ref["amplitude"].get<double>();
  }
  const long rho = get_int("rho", 4);
  const long n = get_int("n", name == "figure-one" ? 3 : 2);
  if (n < 0) throw InvalidInput("model: 'n' must be non-negative");
  if (name == "figure-one") {
    if (ref.contains("amplitude")) throw InvalidInput("model: figure-one takes no amplitude");
    return MultiscaleModel::self_similar(potentials::figure_one(), rho, static_cast<int>(n));
  }
  if (name == "exceptional-ratio")
    return MultiscaleModel::self_similar(potentials::exceptional_ratio(amplitude), rho, static_cast<int>(n));
  if (name == "battery-1d")
    return MultiscaleModel::self_similar(potentials::sine(1, 0, 1, amplitude), rho, static_cast<int>(n));
  throw InvalidInput("model: unknown bundled model '" + name + "'");
}

SolverConfig solver_config(const json& j) {
  SolverConfig c;
  c.tolerance = j.at("tolerance").get<double>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.points_per_oscillation = j.at("points_per_oscillation").get<int>();
  c.resolution = j.at("resolution").get<int>();
  const auto disc = j.at("discretization").get<std::string>();
  if (disc == "finite-volume") {
    c.discretization = Discretization::FiniteVolume;
  } else if (disc == "spectral") {
    c.discretization = Discretization::Spectral;
  } else {
    throw InvalidInput("solver.discretization must be \"finite-volume\" or \"spectral\"");
  }
  const auto pre = j.at("preconditioner").get<std::string>();
  if (pre == "fourier") {
    c.preconditioner = Preconditioner::Fourier;
  } else if (pre == "multigrid") {
    c.preconditioner = Preconditioner::Multigrid;
  } else {
    throw InvalidInput("solver.preconditioner must be \"fourier\" or \"multigrid\"");
  }
  c.max_points = j.at("max_points").get<std::size_t>();
  return c;
}

SdeConfig sde_config(const json& j, std::uint64_t seed) {
  SdeConfig c;
  c.dt = j.at("dt").get<double>();
  c.seed = seed;
  c.paths = j.at("paths").get<std::size_t>();
  c.c1 = j.at("c1").get<double>();
  c.c2 = j.at("c2").get<double>();
  c.bridge = j.at("bridge").get<bool>();
  c.censor_factor = j.at("censor_factor").get<double>();
  c.max_censored_fraction = j.at("max_censored_fraction").get<double>();
  c.drift_sign = j.at("drift_sign").get<double>();
  return c;
}

}  // namespace homog
