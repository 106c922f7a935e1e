#include "homog/runner/run.hpp"

#include "homog/analysis/decay.hpp"
#include "homog/analysis/quadrature.hpp"
#include "homog/analysis/two_scale.hpp"
#include "homog/ergodic/pressure.hpp"
#include "homog/runner/verify.hpp"
#include "homog/sde/tail.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/hash.hpp"

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#ifndef HOMOG_VERSION
#define HOMOG_VERSION "0.0.0"
#endif
#ifndef HOMOG_GIT_SHA
#define HOMOG_GIT_SHA "unknown"
#endif

namespace homog {

namespace {

using json = nlohmann::json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Eigen::VectorXd to_vector(const json& a, int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

std::vector<double> to_doubles(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.get<double>());
  return v;
}

// Collects output files in write order.
class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    files_.push_back({{"file", name}, {"hash", content_hash(content)}, {"bytes", content.size()}});
  }
  void csv(const std::string& name, const CsvTable& t) { text(name, t.str()); }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  const json& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  json files_ = json::array();
};

struct Status {
  int code = kExitOk;
  json diagnostics = json::array();

  void fail(int c, const std::string& why) {
    if (code == kExitOk) code = c;
    diagnostics.push_back(why);
  }
};

json tensor_json(const EffectiveTensor& t) { return t.to_json(); }

void run_diffusivity(const ExperimentConfig& c, const MultiscaleModel& m, Outputs& out) {
  int level = c.params["level"].get<int>();
  if (level < 0) level = m.scale_count() - 1;
  auto t = effective_diffusivity(m.unit_torus_potential(level), solver_config(c.solver));
  out.json_file("tensor.json", tensor_json(t));
}

void run_two_scale(const ExperimentConfig& c, const MultiscaleModel& m, Outputs& out) {
  const SolverConfig sc = solver_config(c.solver);
  std::vector<long> ratios;
  for (const auto& r : c.params["ratios"]) ratios.push_back(r.get<long>());
  const PotentialExpr& u = m.scale(0);
  const PotentialExpr& t = m.scale(1);
  auto study = two_scale_convergence_study(u, t, ratios, sc);
  out.csv("convergence.csv", convergence_table(study));
  json summary = {{"D_U", tensor_json(study.d_u)}, {"D_T", tensor_json(study.d_t)}, {"D_UT", tensor_json(study.d_ut)}};
  json rows = json::array();
  for (const auto& r : study.rows) rows.push_back({{"R", r.ratio}, {"corollary_holds", r.corollary_holds}});
  summary["rows"] = rows;

  const long tr = c.params["translation_ratio"].get<long>();
  if (tr != 0) {
    std::vector<Eigen::VectorXd> shifts;
    for (const auto& y : c.params["translation_shifts"]) shifts.push_back(to_vector(y, m.dimension()));
    auto audit = translation_audit(u, t, tr, shifts, m.alpha(), sc);
    CsvTable tab;
    for (int a = 0; a < m.dimension(); ++a) tab.columns.push_back("y" + std::to_string(a));
    tab.columns.push_back("g");
    for (const auto& row : audit.rows) {
      std::vector<std::string> cells;
      for (int a = 0; a < m.dimension(); ++a) cells.push_back(format_number(row.y[a]));
      cells.push_back(format_number(row.g));
      tab.add(cells);
    }
    out.csv("translation.csv", tab);
    summary["translation"] = {{"R", tr},
                              {"holder_T", audit.holder_t},
                              {"bound", audit.bound},
                              {"max_g", audit.max_g},
                              {"within_bound", audit.within_bound}};
  }
  out.json_file("two_scale.json", summary);
}

void run_scan(const ExperimentConfig& c, const MultiscaleModel& m, Outputs& out, json& timing) {
  int n_max = c.params["n_max"].get<int>();
  if (n_max < 0) n_max = m.scale_count() - 1;
  auto scan = decay_scan(m, n_max, solver_config(c.solver));
  auto audit = sandwich_audit(scan.records, scan.scale_tensors);
  // Wall times go to the manifest so that the table stays reproducible.
  out.csv("decay.csv", decay_table(scan, audit));
  json seconds = json::array();
  for (const auto& r : scan.records) seconds.push_back(r.seconds);
  timing["scan_seconds"] = seconds;
  json scales = json::array();
  for (const auto& t : scan.scale_tensors) scales.push_back(tensor_json(t));
  out.json_file("scan.json", {{"rate",
                               {{"lambda_plus", scan.rate.lambda_plus},
                                {"lambda_minus", scan.rate.lambda_minus},
                                {"first", scan.rate.first},
                                {"last", scan.rate.last}}},
                              {"eps_hat", audit.eps_hat},
                              {"max_eps", audit.max_eps},
                              {"rho_min", scan.rho_min},
                              {"k_alpha", scan.k_alpha},
                              {"outside_hypothesis", scan.outside_hypothesis},
                              {"scale_tensors", scales}});
}

void run_pressure(const ExperimentConfig& c, const MultiscaleModel& m, Outputs& out) {
  const auto& p = c.params;
  const long rho = p["rho"].get<long>();
  ZConfig zc;
  zc.quadrature.q = p["q"].get<int>();
  zc.quadrature.max_points = p["max_points"].get<std::size_t>();
  zc.n_cap = p["n_cap"].get<int>();
  const PotentialExpr& u = m.scale(0);
  auto z = z_functional(u, rho, zc);
  CocycleConfig cc;
  cc.threshold = p["cocycle_threshold"].get<double>();
  cc.max_points = zc.quadrature.max_points;
  int n = p["cocycle_n_max"].get<int>();
  if (n <= 0) {
    QuadratureConfig q = zc.quadrature;
    n = max_feasible_n(u, rho, q, cc.oversample);
  }
  if (n < 3) throw BudgetError("pressure: the cocycle criterion needs n >= 3 within the point budget");
  auto cocycle = cocycle_criterion(u, rho, n, cc);
  out.csv("pressure_plus.csv", pressure_table(z.plus));
  out.csv("pressure_minus.csv", pressure_table(z.minus));
  json s = pressure_summary(z, cocycle);
  s["cocycle_a"] = cocycle.a;
  s["cocycle_positive"] = cocycle.positive;
  out.json_file("pressure.json", s);
}

// lambda_min / lambda_max over the scales' own tensors.
std::pair<double, double> scale_spectrum(const MultiscaleModel& m, const SolverConfig& sc) {
  double lo = 1e300, hi = -1e300;
  std::map<std::string, std::pair<double, double>> seen;
  for (const auto& u : m.scales()) {
    const std::string key = u.to_json().dump();
    auto it = seen.find(key);
    if (it == seen.end()) {
      std::pair<double, double> v;
      if (m.dimension() == 1) {
        const double d = harmonic_diffusivity_1d(u).value;
        v = {d, d};
      } else {
        auto t = effective_diffusivity(u, sc);
        v = {t.lambda_min(), t.lambda_max()};
      }
      it = seen.emplace(key, v).first;
    }
    lo = std::min(lo, it->second.first);
    hi = std::max(hi, it->second.second);
  }
  return {lo, hi};
}

void run_exit(const ExperimentConfig& c, const MultiscaleModel& m, Outputs& out, Status& status) {
  const auto& p = c.params;
  const SdeConfig sde = sde_config(c.sde, c.seed);
  const int d = m.dimension();
  const Eigen::VectorXd center = to_vector(p["center"], d);
  std::optional<Eigen::VectorXd> start;
  if (!p["start"].is_string()) start = to_vector(p["start"], d);
  std::vector<ExitTimeRecord> records;
  for (double r : to_doubles(p["radii"])) {
    records.push_back(mean_exit_time(m, r, center, start, sde));
    if (!records.back().valid)
      status.fail(kExitNumerical, "exit r=" + format_number(r) + ": " + records.back().diagnostics);
  }
  out.csv("exit.csv", exit_table(records));

  if (records.size() >= 3) {
    json summary;
    try {
      std::vector<long> lengths;
      if (m.scale_count() >= 2)
        for (int k = 0; k < m.scale_count(); ++k) lengths.push_back(m.period(k));
      auto fit = exit_exponent_fit(records, lengths);
      std::vector<ExponentWindow> windows;
      if (p["windows"].get<bool>() && m.scale_count() >= 2) {
        auto [lo, hi] = scale_spectrum(m, solver_config(c.solver));
        for (double r : fit.r) windows.push_back(exponent_window(lo, hi, m.rho_min(), m.rho_max(), r));
      }
      summary = exponent_summary(fit, windows);
      summary["nu_slope_stderr"] = fit.nu_slope_stderr;
      summary["nu_stderr"] = fit.nu_stderr;
    } catch (const InvalidInput& e) {
      summary = {{"fit_error", e.what()}};
    }
    out.json_file("exponents.json", summary);
  }
}

void run_tail(const ExperimentConfig& c, const MultiscaleModel& m, Outputs& out, Status& status) {
  const auto& p = c.params;
  TailWindow w;
  if (p["window_nu"].is_number()) w.nu = p["window_nu"].get<double>();
  w.c10 = p["c10"].get<double>();
  w.c11 = p["c11"].get<double>();
  auto h = heat_tail(m, to_vector(p["start"], m.dimension()), to_doubles(p["times"]), to_doubles(p["radii"]),
                     sde_config(c.sde, c.seed), w, p["min_hits"].get<std::size_t>());
  out.csv("tail.csv", tail_table(h.records));
  json fit = {{"d_w", h.fit.d_w},        {"shape", h.fit.shape}, {"residual", h.fit.residual},
              {"cells", h.fit.cells},    {"valid", h.fit.valid}, {"dt", h.dt},
              {"window_nu", p["window_nu"]}};
  out.json_file("tail_fit.json", fit);
  if (!h.fit.valid) status.fail(kExitNumerical, "tail: walk-dimension fit is not identified by the usable cells");
}

void run_verify(const ExperimentConfig& c, const std::filesystem::path& dir, Outputs& out, Status& status,
                json& timing, const std::function<void(const std::string&)>& progress) {
  VerifyOptions o;
  o.scratch = dir / "reproducibility";
  if (progress) o.on_result = [&](const CriterionResult& r) { progress(format_result(r)); };
  o.tier = c.params["tier"].get<std::string>();
  o.drift_sign = c.params["drift_sign"].get<double>();
  o.only = c.params["only"].get<std::vector<int>>();
  auto results = verify_suite(o);
  CsvTable t;
  t.columns = {"id", "status", "measured", "expected"};
  json seconds = json::object();
  for (const auto& r : results) {
    t.add({std::to_string(r.id), r.status, "\"" + r.measured + "\"", "\"" + r.expected + "\""});
    seconds[std::to_string(r.id)] = r.seconds;
    if (r.status == "FAIL") status.fail(kExitCriterion, "criterion " + std::to_string(r.id) + " failed");
  }
  timing["criterion_seconds"] = seconds;
  out.csv("verify.csv", t);
}

// Flattens JSON leaves into (pointer, value).
void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& leaves) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix + "/" + it.key(), leaves);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "/" + std::to_string(i), leaves);
  } else if (j.is_number_float()) {
    leaves.emplace_back(prefix, format_number(j.get<double>()));
  } else if (j.is_string()) {
    leaves.emplace_back(prefix, j.get<std::string>());
  } else {
    leaves.emplace_back(prefix, j.dump());
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string quote(const std::string& s) {
  return s.find_first_of(",\"") == std::string::npos ? s : "\"" + s + "\"";
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const InvalidInput*>(&e)) return kExitConfig;
  if (dynamic_cast<const BudgetError*>(&e)) return kExitBudget;
  return kExitNumerical;
}

std::string code_version() { return std::string(HOMOG_VERSION) + "+" + HOMOG_GIT_SHA; }

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidInput("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw InvalidInput("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                          const std::function<void(const std::string&)>& progress) {
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Outputs out(out_dir);
  Status status;
  json timing = json::object();
  json manifest;

  if (config.command == "verify") {
    run_verify(config, out_dir, out, status, timing, progress);
  } else {
    const MultiscaleModel m = MultiscaleModel::from_json(config.model);
    if (config.command == "diffusivity") {
      run_diffusivity(config, m, out);
    } else if (config.command == "two-scale") {
      run_two_scale(config, m, out);
    } else if (config.command == "scan") {
      run_scan(config, m, out, timing);
    } else if (config.command == "pressure") {
      run_pressure(config, m, out);
    } else if (config.command == "exit") {
      run_exit(config, m, out, status);
    } else if (config.command == "tail") {
      run_tail(config, m, out, status);
    } else {
      throw InvalidInput("unknown command '" + config.command + "'");
    }
    manifest["model_hash"] = content_hash(config.model.dump());
  }

  timing["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["config_hash"] = config.hash();
  manifest["resolved_config"] = config.resolved();
  manifest["code_version"] = code_version();
  manifest["started"] = started;
  manifest["finished"] = utc_now();
  manifest["outputs"] = out.files();
  manifest["status"] = status.code == kExitOk ? "ok" : "failed";
  manifest["diagnostics"] = status.diagnostics;
  manifest["timing"] = timing;
  write_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return {manifest, status.code};
}

CsvTable emit_report(const std::vector<std::filesystem::path>& manifests, json* index) {
  CsvTable table;
  table.columns = {"model_hash", "command", "param_hash", "table", "row", "column", "value"};
  std::map<std::vector<std::string>, std::string> seen;
  std::vector<std::string> conflicts;
  json params_index = json::object(), models_index = json::object();

  for (const auto& path : manifests) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("report: cannot read manifest '" + path.string() + "'");
    json m;
    try {
      m = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InvalidInput("report: '" + path.string() + "' is not valid JSON");
    }
    if (!m.contains("resolved_config") || !m.contains("outputs"))
      throw InvalidInput("report: '" + path.string() + "' is not a run manifest");
    const json& rc = m["resolved_config"];
    const std::string command = rc.at("command").get<std::string>();
    const std::string model_hash = m.value("model_hash", std::string("-"));
    json tuple = rc;
    tuple.erase("command");
    tuple.erase("model");
    const std::string param_hash = content_hash(tuple.dump());
    params_index[param_hash] = tuple;
    if (rc.contains("model")) models_index[model_hash] = rc["model"];

    auto emit = [&](const std::string& tab, const std::string& row, const std::string& col, const std::string& value) {
      std::vector<std::string> key = {model_hash, command, param_hash, tab, row, col};
      auto [it, inserted] = seen.emplace(key, value);
      if (inserted) {
        table.add({model_hash, command, param_hash, tab, row, quote(col), quote(value)});
      } else if (it->second != value) {
        conflicts.push_back(command + " " + param_hash + " " + tab + "[" + row + "]." + col + ": " + it->second +
                            " vs " + value + " (" + path.string() + ")");
      }
    };

    for (const auto& f : m["outputs"]) {
      const std::string name = f.at("file").get<std::string>();
      const auto file = path.parent_path() / name;
      std::ifstream fin(file, std::ios::binary);
      if (!fin) throw InvalidInput("report: missing output '" + file.string() + "'");
      std::stringstream ss;
      ss << fin.rdbuf();
      const std::string content = ss.str();
      if (content_hash(content) != f.at("hash").get<std::string>())
        throw InvalidInput("report: content hash mismatch for '" + file.string() + "'");
      const std::string stem = std::filesystem::path(name).stem().string();
      if (std::filesystem::path(name).extension() == ".csv") {
        std::istringstream lines(content);
        std::string line;
        std::getline(lines, line);
        const auto header = split_line(line);
        std::size_t r = 0;
        while (std::getline(lines, line)) {
          const auto cells = split_line(line);
          for (std::size_t c = 0; c < header.size() && c < cells.size(); ++c)
            emit(stem, std::to_string(r), header[c], cells[c]);
          ++r;
        }
      } else {
        std::vector<std::pair<std::string, std::string>> leaves;
        flatten(json::parse(content), "", leaves);
        for (const auto& [ptr, value] : leaves) emit(stem, "", ptr, value);
      }
    }
  }
  if (!conflicts.empty()) {
    std::string msg = "report: conflicting values for duplicate keys:";
    for (const auto& c : conflicts) msg += "\n  " + c;
    throw InvalidInput(msg);
  }
  if (index) *index = {{"parameters", params_index}, {"models", models_index}};
  return table;
}

}  // namespace homog
