#include "doctest.h"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "nlex/harness.hpp"

using namespace nlex;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("nlex_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Small configurations for the end-to-end checks.
ExperimentConfig smoke(ExperimentKind k) {
  ExperimentConfig c = default_config(k);
  c.nodes = 64;
  c.draws = 2;
  switch (k) {
    case ExperimentKind::exchange_rate:
    case ExperimentKind::dtn_rate:
    case ExperimentKind::scattering_rate:
    case ExperimentKind::spectrum:
      c.gammas = {0.2, 0.1, 0.05, 0.025};
      break;
    case ExperimentKind::counterexample:
      c.gammas = {0.1, 0.05, 0.025};
      c.drop = 0;
      c.options["max_panel_length"] = 0.25;
      break;
    case ExperimentKind::solve:
      c.geometry["max_panel_length"] = 0.4;
      c.gammas = {0.2};
      break;
    case ExperimentKind::mesh:
      break;
  }
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NLEX_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("slope fits") {
  const std::vector<double> g{0.2, 0.1, 0.05, 0.025, 0.0125};
  std::vector<double> lin = g, half(g.size()), flat(g.size(), 3.0);
  for (std::size_t i = 0; i < g.size(); ++i) half[i] = std::sqrt(g[i]);
  SlopeFit a = fit_slope(g, lin);
  CHECK(a.slope == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a.residual <= 1e-14);
  CHECK(a.used == 5);
  CHECK(fit_slope(g, half).slope == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(fit_slope(g, flat).slope) <= 1e-14);
  CHECK(fit_slope(g, lin, 2).used == 3);
  CHECK_THROWS_AS(fit_slope(g, lin, 3), DomainError);
  std::vector<double> neg = lin;
  neg[2] = 0.0;
  CHECK_THROWS_AS(fit_slope(g, neg), DomainError);
}

TEST_CASE("configuration validation") {
  Json good = config_to_json(default_config(ExperimentKind::exchange_rate));
  CHECK_NOTHROW(config_from_json(good));
  auto rejects = [&](const char* key, Json value) {
    Json j = good;
    j[key] = value;
    CAPTURE(key);
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
  };
  rejects("gammas", Json::array({0.1, 0.2, 0.05, 0.025}));
  rejects("gammas", Json::array({0.2, 0.1, 0.05}));
  rejects("schema_version", 7);
  rejects("experiment", "nonsense");
  rejects("a", 1.5);
  rejects("s", Json::array({0.5}));
  rejects("M", 100.0);
  rejects("unexpected", 1);
  rejects("geometry", Json{{"kind", "triangle"}});
  Json missing = good;
  missing.erase("schema_version");
  CHECK_THROWS_AS(config_from_json(missing), ConfigError);
  // Round trip.
  ExperimentConfig c = config_from_json(good);
  CHECK(config_to_json(c) == good);
}

TEST_CASE("config hash tracks content") {
  ExperimentConfig a = default_config(ExperimentKind::dtn_rate), b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.gammas.back() *= 1.0 + 1e-15;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.options["note"] = "x";
  CHECK(config_hash(a) != config_hash(b));
}

// End to end means a complete report. On the square, 64 nodes is too coarse for
// the Steklov symmetry gate, so those kinds report "not evaluated" with the reason.
TEST_CASE("every experiment kind runs on a smoke mesh in under five seconds") {
  for (auto k : {ExperimentKind::mesh, ExperimentKind::spectrum, ExperimentKind::exchange_rate, ExperimentKind::dtn_rate,
                 ExperimentKind::scattering_rate, ExperimentKind::counterexample, ExperimentKind::solve}) {
    CAPTURE(to_string(k));
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult r = run_experiment(smoke(k));
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE(to_string(k) << ": " << sec << " s, pass=" << r.report.pass << " " << r.error);
    if (!r.error.empty()) {
      CHECK_FALSE(r.report.pass);
      CHECK(r.report.assertion.rfind("not evaluated", 0) == 0);
    }
    CHECK(sec < 5.0);
    CHECK(r.report.experiment == to_string(k));
    CHECK_FALSE(r.report.gammas.empty());
    CHECK_FALSE(r.report.assertion.empty());
  }
}

TEST_CASE("reports round trip and are deterministic") {
  ExperimentConfig c = smoke(ExperimentKind::exchange_rate);
  c.seed = 42;
  ExperimentResult a = run_experiment(c), b = run_experiment(c);
  REQUIRE(a.error.empty());
  CHECK(report_to_json(a, c, false).dump() == report_to_json(b, c, false).dump());
  CHECK(report_to_json(a, c).contains("timestamp"));
  CHECK(report_to_json(a, c)["config_hash"] == config_hash(c));
  CHECK(report_to_json(a, c)["library_version"] == version());

  const fs::path dir = scratch_dir("roundtrip");
  auto files = emit_report(a, c, dir, ReportFormat::both);
  CHECK(files.size() == 2);
  std::ifstream f(dir / "exchange_rate.json");
  RateReport r = report_from_json(Json::parse(f));
  CHECK(r.gammas == a.report.gammas);
  CHECK(r.defects == a.report.defects);
  CHECK(r.columns == a.report.columns);
  CHECK(r.fitted_slope == a.report.fitted_slope);
  CHECK(r.fit_residual == a.report.fit_residual);
  CHECK(r.constant == a.report.constant);
  CHECK(r.pass == a.report.pass);
  for (const auto& [k, v] : a.report.scalars) CHECK(r.scalars.at(k) == v);

  std::ifstream csv(dir / "exchange_rate.csv");
  std::string header, line;
  std::getline(csv, header);
  CHECK(header.rfind("gamma,defect", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == c.gammas.size());

  // The seed is part of the hashed configuration.
  ExperimentConfig d = c;
  d.seed = 43;
  CHECK(config_hash(d) != config_hash(c));
  fs::remove_all(dir);
}

TEST_CASE("snapshot comparison") {
  ExperimentConfig c = smoke(ExperimentKind::dtn_rate);
  ExperimentResult r = run_experiment(c);
  const Json base = report_to_json(r, c, false);
  CHECK(compare_snapshot(base, base).empty());
  Json near = base, far = base;
  near["defects"][1] = base["defects"][1].get<double>() * (1 + 5e-9);
  far["defects"][1] = base["defects"][1].get<double>() * (1 + 2e-8);
  CHECK(compare_snapshot(near, base).empty());
  auto d = compare_snapshot(far, base);
  REQUIRE(d.size() == 1);
  CHECK(d[0].index == 1);
  CHECK(d[0].relative > 1e-8);
  Json shorter = base;
  shorter["defects"].erase(0);
  CHECK_FALSE(compare_snapshot(shorter, base).empty());
}

TEST_CASE("unwritable output is an I/O error") {
  ExperimentConfig c = smoke(ExperimentKind::mesh);
  ExperimentResult r = run_experiment(c);
  const fs::path dir = scratch_dir("io");
  const fs::path blocker = dir / "file";
  std::ofstream(blocker) << "x";
  CHECK_THROWS_AS(emit_report(r, c, blocker / "sub", ReportFormat::both), IoError);
  fs::remove_all(dir);
}

TEST_CASE("solver failures become reports") {
  ExperimentConfig c = smoke(ExperimentKind::solve);
  c.options["max_iter"] = 2;
  ExperimentResult r = run_experiment(c);
  CHECK_FALSE(r.report.pass);
  CHECK(r.extra.at("history").size() == 2);
  CHECK(r.extra.at("converged") == false);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch_dir("cli");
  const std::string out = " --out " + (dir / "out").string();
  {
    std::ofstream f(dir / "mesh.json");
    f << R"({"schema_version": 1, "geometry": {"kind": "unit_square"}, "gammas": [0.1], "nodes": 64})";
  }
  CHECK(run_cli("mesh --config " + (dir / "mesh.json").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "mesh.json"));
  CHECK(fs::exists(dir / "out" / "mesh.csv"));
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"schema_version": 1, "geometry": {"kind": "unit_square"}, "gammas": [0.1, 0.2]})";
  }
  CHECK(run_cli("mesh --config " + (dir / "bad.json").string() + out) == 2);
  {
    std::ofstream f(dir / "broken.json");
    f << "{not json";
  }
  CHECK(run_cli("mesh --config " + (dir / "broken.json").string() + out) == 2);
  {
    std::ofstream f(dir / "mismatch.json");
    f << R"({"schema_version": 1, "experiment": "spectrum", "geometry": {"kind": "unit_square"}, "gammas": [0.1]})";
  }
  CHECK(run_cli("mesh --config " + (dir / "mismatch.json").string() + out) == 2);
  CHECK(run_cli("nonsense") == 2);
  CHECK(run_cli("--version") == 0);
  // A failing assertion still writes the report and exits with 1.
  {
    std::ofstream f(dir / "fail.json");
    f << R"({"schema_version": 1, "geometry": {"partition": "disc", "max_panel_length": 0.4}, "gammas": [0.2],
             "options": {"max_iter": 2}})";
  }
  CHECK(run_cli("solve --config " + (dir / "fail.json").string() + out) == 1);
  CHECK(fs::exists(dir / "out" / "solve.json"));
  CHECK(fs::exists(dir / "out" / "history.csv"));
  fs::remove_all(dir);
}

}  // TEST_SUITE
