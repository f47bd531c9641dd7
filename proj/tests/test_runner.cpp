#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "curvquot/runner.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace curvquot;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// unique per-case scratch directories under the ctest working directory
fs::path scratch(const std::string& tag) {
  const fs::path dir = fs::path("runner_scratch") / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& name,
                         const json& j) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  return p.string();
}

json base_config() {
  return json{{"mode", "solve"},
              {"n", 2},
              {"k", 1},
              {"l", 0},
              {"p", 3.0},
              {"f", {{"constant", 2.0}}},
              {"grid", {{"kind", "axisymmetric"}, {"M", 32}}}};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

std::string strip_timestamp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.find("generated_at") == std::string::npos) out << line << "\n";
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing accepts the reference shape") {
  const runner::ParsedConfig cfg =
      runner::parse_config_text(base_config().dump());
  CHECK(cfg.mode == "solve");
  CHECK(cfg.spec.n == 2);
  CHECK(cfg.spec.p == 3.0);
  CHECK(cfg.grid_kind == GridKind::axisymmetric);
  CHECK(cfg.M == 32);
  CHECK(cfg.newton.tolerance == 1e-10);
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(runner::parse_config_text("not json at all"), ConfigError);
  CHECK_THROWS_AS(runner::parse_config_text("[1,2,3]"), ConfigError);

  json c = base_config();
  c["surprise"] = 1;
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["f"] = {{"constant", 2.0}, {"extra", 1}};
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["grid"] = {{"kind", "axisymmetric"}, {"M", 32}, {"M_phi", 64}};
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c.erase("p");
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["mode"] = "meditate";
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  // two f sources at once
  c = base_config();
  c["f"] = {{"constant", 2.0}, {"expr", json::array()}};
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);
}

TEST_CASE("config parsing enforces mode-regime pairing") {
  json c = base_config();
  c["p"] = 1.5;  // subcritical exponent under solve mode
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["mode"] = "eigen";  // p = 3 is not critical
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["mode"] = "subcritical";
  c["p"] = 1.5;
  c["f"] = {{"constant", 2.0}};
  CHECK_NOTHROW(runner::parse_config_text(c.dump()));

  c = base_config();
  c["solution_csv"] = "u.csv";  // only meaningful under verify
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["mode"] = "verify";
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  // full2d grids exist only on S^2
  c = base_config();
  c["n"] = 3;
  c["k"] = 2;
  c["grid"] = {{"kind", "full2d"}, {"M_theta", 16}, {"M_phi", 32}};
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);

  c = base_config();
  c["uniqueness_trials"] = 3;
  CHECK_NOTHROW(runner::parse_config_text(c.dump()));
  c["mode"] = "eigen";
  c["p"] = 2.0;
  CHECK_THROWS_AS(runner::parse_config_text(c.dump()), ConfigError);
}

TEST_CASE("end-to-end solve run produces a full report") {
  const fs::path dir = scratch("solve_basic");
  const std::string cfg = write_config(dir, "run.json", base_config());
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  REQUIRE(runner::run(opts) == 0);

  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["tool"] == "curvquot");
  CHECK(rep["mode"] == "solve");
  CHECK(rep["regime"] == "supercritical");
  CHECK(rep["convergence"]["converged"] == true);
  for (const auto& v : rep["verdicts"]) {
    CAPTURE(v["check"].get<std::string>());
    CHECK(v["pass"] == true);
  }
  CHECK(fs::exists(dir / "out" / "trace.csv"));
  CHECK(fs::exists(dir / "out" / "solution.csv"));
  CHECK(fs::exists(dir / "out" / "diagnostics.json"));
  CHECK(fs::exists(dir / "out" / "profile.csv"));

  // (k,l,p) = (1,0,3) with f = 2: the exact solution is the constant 2
  const GridPtr g = make_axisymmetric_grid(2, 32);
  const ScalarField u = read_field_csv(g, (dir / "out" / "solution.csv").string());
  for (double v : u.v) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));

  const json diag = read_json(dir / "out" / "diagnostics.json");
  CHECK(diag["min_eigen_A"].get<double>() > 0.0);
}

TEST_CASE("eigen run reports the constant eigenvalue") {
  const fs::path dir = scratch("eigen_const");
  json c = base_config();
  c["mode"] = "eigen";
  c["p"] = 2.0;
  c["f"] = {{"constant", 3.0}};
  const std::string cfg = write_config(dir, "run.json", c);
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  REQUIRE(runner::run(opts) == 0);
  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["eigen"]["tau"].get<double>() == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(rep["eigen"]["tau_sequence"].size() == 9);
}

TEST_CASE("subcritical run with even data") {
  const fs::path dir = scratch("subcritical");
  json c = base_config();
  c["mode"] = "subcritical";
  c["p"] = 1.5;
  c["f"] = {{"expr", json{{"terms", json::array({json{{"coeff", 0.2},
                                                      {"powers", {0, 0, 2}}}})}}},
            {"even", true}};
  const std::string cfg = write_config(dir, "run.json", c);
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  REQUIRE(runner::run(opts) == 0);
  const json rep = read_json(dir / "out" / "report.json");
  bool saw_evenness = false;
  for (const auto& v : rep["verdicts"]) {
    if (v["check"] == "even_symmetry") {
      saw_evenness = true;
      CHECK(v["pass"] == true);
    }
  }
  CHECK(saw_evenness);
}

TEST_CASE("verify mode accepts its own solution and rejects a scaled one") {
  const fs::path dir = scratch("verify");
  const std::string cfg = write_config(dir, "run.json", base_config());
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  REQUIRE(runner::run(opts) == 0);

  json vc = base_config();
  vc["mode"] = "verify";
  vc["solution_csv"] = (dir / "out" / "solution.csv").string();
  const std::string vcfg = write_config(dir, "verify.json", vc);
  runner::RunOptions vopts;
  vopts.config_path = vcfg;
  vopts.out_dir = (dir / "vout").string();
  CHECK(runner::run(vopts) == 0);

  // scale the stored solution by 1.5: still convex, no longer a solution
  const GridPtr g = make_axisymmetric_grid(2, 32);
  ScalarField u = read_field_csv(g, (dir / "out" / "solution.csv").string());
  for (auto& x : u.v) x *= 1.5;
  write_field_csv(u, (dir / "scaled.csv").string());
  vc["solution_csv"] = (dir / "scaled.csv").string();
  const std::string bcfg = write_config(dir, "verify_bad.json", vc);
  runner::RunOptions bopts;
  bopts.config_path = bcfg;
  bopts.out_dir = (dir / "bout").string();
  CHECK(runner::run(bopts) == 4);
  const json rep = read_json(dir / "bout" / "report.json");
  bool residual_failed = false;
  for (const auto& v : rep["verdicts"])
    if (v["check"] == "equation_residual" && v["pass"] == false)
      residual_failed = true;
  CHECK(residual_failed);
}

TEST_CASE("missing or unreadable inputs exit with the config status") {
  const fs::path dir = scratch("badinput");
  runner::RunOptions opts;
  opts.config_path = (dir / "nope.json").string();
  opts.out_dir = (dir / "out").string();
  CHECK(runner::run(opts) == 2);

  std::ofstream(dir / "garbage.json") << "{{{";
  opts.config_path = (dir / "garbage.json").string();
  CHECK(runner::run(opts) == 2);

  json vc = base_config();
  vc["mode"] = "verify";
  vc["solution_csv"] = (dir / "absent.csv").string();
  opts.config_path = write_config(dir, "verify.json", vc);
  CHECK(runner::run(opts) == 2);
}

TEST_CASE("starved newton budget exits with the solver status") {
  const fs::path dir = scratch("starved");
  json c = base_config();
  c["f"] = {{"expr", json{{"terms", json::array({json{{"coeff", 0.4},
                                                      {"powers", {0, 0, 1}}}})}}}};
  c["newton"] = {{"max_iterations", 1}, {"tolerance", 1e-15}};
  const std::string cfg = write_config(dir, "run.json", c);
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  CHECK(runner::run(opts) == 3);
  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["convergence"]["converged"] == false);
  CHECK(fs::exists(dir / "out" / "trace.csv"));
  CHECK(fs::exists(dir / "out" / "solution.csv"));
}

TEST_CASE("reports are deterministic across reruns") {
  const fs::path dir = scratch("determinism");
  json c = base_config();
  c["uniqueness_trials"] = 2;
  c["seed"] = 99;
  const std::string cfg = write_config(dir, "run.json", c);
  for (const char* sub : {"a", "b"}) {
    runner::RunOptions opts;
    opts.config_path = cfg;
    opts.out_dir = (dir / sub).string();
    REQUIRE(runner::run(opts) == 0);
  }
  CHECK(strip_timestamp(dir / "a" / "report.json") ==
        strip_timestamp(dir / "b" / "report.json"));
  CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
  CHECK(slurp(dir / "a" / "solution.csv") ==
        slurp(dir / "b" / "solution.csv"));
  CHECK(slurp(dir / "a" / "diagnostics.json") ==
        slurp(dir / "b" / "diagnostics.json"));
}

TEST_CASE("sweep mode fans out rows and aggregates") {
  const fs::path dir = scratch("sweep");
  json c = base_config();
  c["mode"] = "sweep";
  c["sweep"] = {{"p", {3.0, 2.0}}};
  c["grid"] = {{"kind", "axisymmetric"}, {"M", 24}};
  const std::string cfg = write_config(dir, "run.json", c);
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  REQUIRE(runner::run(opts) == 0);
  CHECK(fs::exists(dir / "out" / "row_0" / "report.json"));
  CHECK(fs::exists(dir / "out" / "row_1" / "report.json"));
  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["rows"].size() == 2);
  CHECK(read_json(dir / "out" / "row_1" / "report.json")["regime"] ==
        "critical");
}

TEST_CASE("command-line overrides rescale the grid") {
  const fs::path dir = scratch("overrides");
  const std::string cfg = write_config(dir, "run.json", base_config());
  runner::RunOptions opts;
  opts.config_path = cfg;
  opts.out_dir = (dir / "out").string();
  opts.resolution = 24;
  REQUIRE(runner::run(opts) == 0);
  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["config"]["grid"]["M"] == 24);
  CHECK(rep["grid"]["nodes"] == 24);

  opts.resolution = 4;  // below the coarseness floor
  CHECK(runner::run(opts) == 2);
}
