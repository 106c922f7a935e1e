#include "homog/runner/config.hpp"
#include "homog/runner/run.hpp"
#include "homog/runner/verify.hpp"
#include "homog/util/errors.hpp"
#include "homog/util/hash.hpp"

#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace homog;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("homog-runner-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flat potential in the plane: D = identity.
json flat_2d() {
  return {{"command", "diffusivity"},
          {"seed", 1},
          {"model", MultiscaleModel({PotentialExpr::zero(2)}, {}).to_json()},
          {"solver", {{"resolution", 16}}}};
}

json sine_1d(double amplitude) {
  return {{"command", "diffusivity"},
          {"seed", 1},
          {"model", {{"bundled", "exceptional-ratio"}, {"n", 0}, {"amplitude", amplitude}}},
          {"solver", {{"resolution", 512}}}};
}

}  // namespace

TEST_CASE("config: unknown keys, wrong types and missing seeds are rejected") {
  json ok = flat_2d();
  CHECK_NOTHROW(parse_config(ok));

  json top = ok;
  top["sedd"] = 3;
  CHECK_THROWS_AS(parse_config(top), InvalidInput);

  json nested = ok;
  nested["solver"]["tolerence"] = 1e-9;
  CHECK_THROWS_AS(parse_config(nested), InvalidInput);

  json typed = ok;
  typed["solver"]["max_iterations"] = "many";
  CHECK_THROWS_AS(parse_config(typed), InvalidInput);

  json unseeded = ok;
  unseeded.erase("seed");
  CHECK_THROWS_AS(parse_config(unseeded), InvalidInput);
  CHECK(parse_config(unseeded, {}, 9).seed == 9);

  json cmd = ok;
  cmd["command"] = "diffuse";
  CHECK_THROWS_AS(parse_config(cmd), InvalidInput);

  json tier = {{"command", "verify"}, {"seed", 0}, {"params", {{"tier", "medium"}}}};
  CHECK_THROWS_AS(parse_config(tier), InvalidInput);

  json exit_cfg = {{"command", "exit"}, {"seed", 1}, {"model", {{"bundled", "battery-1d"}}}};
  CHECK_THROWS_AS(parse_config(exit_cfg), InvalidInput);  // radii are required
}

TEST_CASE("config: resolution fills every default and is idempotent") {
  auto c = parse_config(flat_2d());
  json r = c.resolved();
  CHECK(r["solver"].contains("tolerance"));
  CHECK(r["solver"]["resolution"] == 16);
  auto again = parse_config(r);
  CHECK(again.hash() == c.hash());
  CHECK(again.resolved() == r);

  json other = flat_2d();
  other["seed"] = 2;
  CHECK(parse_config(other).hash() != c.hash());
}

TEST_CASE("exit codes follow the error class") {
  CHECK(exit_code_for(InvalidInput("x")) == kExitConfig);
  CHECK(exit_code_for(BudgetError("x")) == kExitBudget);
  CHECK(exit_code_for(SolverError("x", {})) == kExitNumerical);
  CHECK(exit_code_for(std::runtime_error("x")) == kExitNumerical);
}

TEST_CASE("write_atomic replaces the file and leaves no temporaries") {
  TempDir dir;
  write_atomic(dir.path / "a.txt", "one");
  write_atomic(dir.path / "a.txt", "two");
  CHECK(slurp(dir.path / "a.txt") == "two");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("diffusivity run: flat potential gives the identity and a complete manifest") {
  TempDir dir;
  auto out = run_experiment(parse_config(flat_2d()), dir.path / "run");
  CHECK(out.exit_code == kExitOk);
  json t = json::parse(slurp(dir.path / "run" / "tensor.json"));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(t["matrix"][i][j].get<double>() == doctest::Approx(i == j).epsilon(1e-12));

  json m = json::parse(slurp(dir.path / "run" / "manifest.json"));
  for (const char* key : {"model_hash", "config_hash", "resolved_config", "code_version", "started", "finished",
                          "outputs", "status", "diagnostics", "timing"})
    CHECK(m.contains(key));
  CHECK(m["status"] == "ok");
  REQUIRE(m["outputs"].size() == 1);
  CHECK(m["outputs"][0]["hash"] == file_hash(dir.path / "run" / "tensor.json"));
}

TEST_CASE("re-running a manifest reproduces its outputs byte for byte") {
  TempDir dir;
  json cfg = {{"command", "exit"},
              {"seed", 3},
              {"model", {{"bundled", "battery-1d"}, {"n", 1}}},
              {"sde", {{"paths", 200}}},
              {"params", {{"radii", {1.0, 2.0}}}}};
  auto a = run_experiment(parse_config(cfg), dir.path / "a");
  auto b = run_experiment(load_config(dir.path / "a" / "manifest.json"), dir.path / "b");
  CHECK(a.manifest["config_hash"] == b.manifest["config_hash"]);
  CHECK(a.manifest["outputs"] == b.manifest["outputs"]);
  CHECK(slurp(dir.path / "a" / "exit.csv") == slurp(dir.path / "b" / "exit.csv"));

  // A different seed changes the sample.
  auto c = run_experiment(load_config(dir.path / "a" / "manifest.json", 4), dir.path / "c");
  CHECK(c.manifest["outputs"] != a.manifest["outputs"]);
}

TEST_CASE("report: empty input, pass-through, duplicates and conflicts") {
  TempDir dir;
  auto empty = emit_report({});
  CHECK(empty.rows.empty());
  CHECK(empty.columns.size() == 7);

  run_experiment(parse_config(sine_1d(0.5)), dir.path / "a");
  auto single = emit_report({dir.path / "a" / "manifest.json"});
  CHECK(!single.rows.empty());
  bool saw_matrix = false;
  for (const auto& r : single.rows)
    saw_matrix = saw_matrix || (r[3] == "tensor" && r[5].find("/matrix/0/0") != std::string::npos);
  CHECK(saw_matrix);

  // The same run twice collapses to one set of rows.
  fs::copy(dir.path / "a", dir.path / "b");
  json index;
  auto twice = emit_report({dir.path / "a" / "manifest.json", dir.path / "b" / "manifest.json"}, &index);
  CHECK(twice.rows.size() == single.rows.size());
  CHECK(index.contains("parameters"));

  // A different model is a different key, not a conflict.
  run_experiment(parse_config(sine_1d(0.7)), dir.path / "c");
  auto both = emit_report({dir.path / "a" / "manifest.json", dir.path / "c" / "manifest.json"});
  CHECK(both.rows.size() == 2 * single.rows.size());

  // Same key, different value: rewrite b's tensor and its recorded hash.
  json t = json::parse(slurp(dir.path / "b" / "tensor.json"));
  t["matrix"][0][0] = 0.123;
  const std::string body = t.dump(2) + "\n";
  write_atomic(dir.path / "b" / "tensor.json", body);
  json m = json::parse(slurp(dir.path / "b" / "manifest.json"));
  m["outputs"][0]["hash"] = content_hash(body);
  m["outputs"][0]["bytes"] = body.size();
  write_atomic(dir.path / "b" / "manifest.json", m.dump(2));
  CHECK_THROWS_AS(emit_report({dir.path / "a" / "manifest.json", dir.path / "b" / "manifest.json"}), InvalidInput);

  // An output that no longer matches its recorded hash is refused.
  write_atomic(dir.path / "c" / "tensor.json", "{}");
  CHECK_THROWS_AS(emit_report({dir.path / "c" / "manifest.json"}), InvalidInput);
}

TEST_CASE("verify: tiers and result formatting") {
  CHECK(tier_criteria("full").size() == 13);
  auto fast = tier_criteria("fast");
  CHECK(std::find(fast.begin(), fast.end(), 10) == fast.end());
  CHECK_THROWS_AS(tier_criteria("slow"), InvalidInput);

  VerifyOptions o;
  o.only = {8};
  auto results = verify_suite(o);
  REQUIRE(results.size() == 13);
  for (const auto& r : results) CHECK(r.status == (r.id == 8 ? "PASS" : "SKIP"));
  CHECK(format_result(results[7]).rfind("[PASS] 8 ", 0) == 0);
}
