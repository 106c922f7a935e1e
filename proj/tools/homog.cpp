// homog: command-line front end. Every experiment command reads a JSON
// config and writes its outputs plus manifest.json into --out.

#include "homog/runner/run.hpp"
#include "homog/runner/verify.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* app, CommonOptions& o, bool config_required) {
  auto* c = app->add_option("--config", o.config, "experiment config (JSON)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "output directory");
  app->add_option("--seed", o.seed, "overrides the config seed");
  app->add_option("--threads", o.threads, "worker threads (HOMOG_THREADS takes precedence)");
}

fs::path default_out(const homog::ExperimentConfig& c) {
  return fs::path("homog-" + c.command + "-" + c.hash().substr(0, 8));
}

int run_command(const std::string& command, const CommonOptions& o) {
  auto cfg = homog::load_config(o.config, o.seed);
  if (cfg.command != command)
    throw homog::InvalidInput("config is for command \"" + cfg.command + "\", not \"" + command + "\"");
  const fs::path out = o.out.empty() ? default_out(cfg) : fs::path(o.out);
  auto outcome = homog::run_experiment(cfg, out);
  std::cout << (out / "manifest.json").string() << "\n";
  for (const auto& d : outcome.manifest["diagnostics"]) std::cerr << "warning: " << d.get<std::string>() << "\n";
  return outcome.exit_code;
}

int run_verify(const CommonOptions& o, CLI::Option* tier_opt, const std::string& tier, CLI::Option* sign_opt,
               double drift_sign, const std::vector<int>& only) {
  json j;
  if (!o.config.empty()) {
    j = homog::load_config(o.config, o.seed.value_or(0)).resolved();
    if (j["command"] != "verify") throw homog::InvalidInput("config is not a verify config");
  } else {
    j = {{"command", "verify"}, {"seed", 0}, {"params", json::object()}};
  }
  if (tier_opt->count()) j["params"]["tier"] = tier;
  if (sign_opt->count()) j["params"]["drift_sign"] = drift_sign;
  if (!only.empty()) j["params"]["only"] = only;
  auto cfg = homog::parse_config(j, {}, o.seed);
  auto print = [](const std::string& line) {
    std::cout << line << std::endl;
  };

  if (!o.out.empty()) return homog::run_experiment(cfg, o.out, print).exit_code;

  homog::VerifyOptions v;
  v.tier = cfg.params["tier"].get<std::string>();
  v.drift_sign = cfg.params["drift_sign"].get<double>();
  v.only = cfg.params["only"].get<std::vector<int>>();
  v.on_result = [&](const homog::CriterionResult& r) { print(homog::format_result(r)); };
  int code = homog::kExitOk;
  for (const auto& r : homog::verify_suite(v))
    if (r.status == "FAIL") code = homog::kExitCriterion;
  return code;
}

int run_report(const std::vector<std::string>& manifests, const std::string& out) {
  std::vector<fs::path> paths(manifests.begin(), manifests.end());
  json index;
  auto table = homog::emit_report(paths, &index);
  fs::create_directories(out);
  homog::write_atomic(fs::path(out) / "report.csv", table.str());
  homog::write_atomic(fs::path(out) / "report.json", index.dump(2) + "\n");
  std::cout << (fs::path(out) / "report.csv").string() << "\n";
  return homog::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic and multiscale homogenization toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", homog::code_version());

  const char* experiments[][2] = {
      {"diffusivity", "effective diffusivity tensor of one scale"},
      {"two-scale", "two-scale convergence study"},
      {"scan", "multi-scale decay scan with sandwich audit"},
      {"pressure", "pressure, Z functional and cocycle criterion"},
      {"exit", "mean exit times and sub-diffusion exponents"},
      {"tail", "heat-kernel tail and walk dimension"},
  };
  CommonOptions common;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& e : experiments) {
    auto* s = app.add_subcommand(e[0], e[1]);
    add_common(s, common, true);
    subs.emplace_back(e[0], s);
  }

  auto* verify = app.add_subcommand("verify", "acceptance criteria");
  add_common(verify, common, false);
  std::string tier = "fast";
  double drift_sign = 1.0;
  std::vector<int> only;
  auto* tier_opt = verify->add_option("--tier", tier, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  auto* sign_opt =
      verify->add_option("--drift-sign", drift_sign, "-1 runs with the drift sign flipped (mutation check)");
  verify->add_option("--only", only, "criterion ids to run")->delimiter(',');

  auto* report = app.add_subcommand("report", "merge manifests into one long table");
  std::vector<std::string> manifests;
  std::string report_out;
  report->add_option("manifests", manifests, "manifest.json files")->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : homog::kExitConfig;
  }

  try {
    if (common.threads > 0) homog::set_thread_count(common.threads);
    if (verify->parsed()) return run_verify(common, tier_opt, tier, sign_opt, drift_sign, only);
    if (report->parsed()) return run_report(manifests, report_out);
    for (const auto& [name, s] : subs)
      if (s->parsed()) return run_command(name, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return homog::exit_code_for(e);
  }
  return homog::kExitConfig;
}
