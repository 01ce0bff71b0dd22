// Command-line driver: one subcommand per experiment kind.
//
// Exit status: 0 when the experiment's assertion passes, 1 when it fails (the
// report is still written), 2 for configuration or I/O errors.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "nlex/harness.hpp"

namespace {

nlex::ExperimentConfig load(const std::string& path, nlex::ExperimentKind kind) {
  if (path.empty()) return nlex::default_config(kind);
  std::ifstream f(path);
  if (!f) throw nlex::ConfigError("cannot read config file '" + path + "'");
  nlex::Json j;
  try {
    j = nlex::Json::parse(f);
  } catch (const nlex::Json::parse_error& e) {
    throw nlex::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.contains("experiment")) j["experiment"] = nlex::to_string(kind);
  nlex::ExperimentConfig c = nlex::config_from_json(j);
  if (c.kind != kind)
    throw nlex::ConfigError("config describes '" + nlex::to_string(c.kind) + "' but the subcommand is '" +
                            nlex::to_string(kind) + "'");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exchange-operator and DtN experiments for the modified Helmholtz operator"};
  app.set_version_flag("--version", std::string(nlex::version()));
  app.require_subcommand(1);

  std::string config, out = "out", format;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  const std::map<std::string, nlex::ExperimentKind> commands = {
      {"mesh", nlex::ExperimentKind::mesh},
      {"spectrum", nlex::ExperimentKind::spectrum},
      {"rates-exchange", nlex::ExperimentKind::exchange_rate},
      {"rates-dtn", nlex::ExperimentKind::dtn_rate},
      {"rates-scatter", nlex::ExperimentKind::scattering_rate},
      {"counterexample", nlex::ExperimentKind::counterexample},
      {"solve", nlex::ExperimentKind::solve},
  };
  std::map<CLI::App*, nlex::ExperimentKind> subs;
  for (const auto& [name, kind] : commands) {
    CLI::App* s = app.add_subcommand(name, "Run the " + nlex::to_string(kind) + " experiment");
    s->add_option("--config", config, "JSON configuration (defaults to the built-in one)")->check(CLI::ExistingFile);
    s->add_option("--out", out, "Output directory")->capture_default_str();
    s->add_option("--seed", seed, "Override the configuration seed");
    s->add_option("--format", format, "Write only csv or only json")->check(CLI::IsMember({"csv", "json"}));
    s->add_flag("--quiet", quiet, "Do not print the summary line");
    subs[s] = kind;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    nlex::ExperimentKind kind{};
    for (const auto& [s, k] : subs)
      if (s->parsed()) kind = k;
    nlex::ExperimentConfig c = load(config, kind);
    if (seed) c.seed = *seed;
    nlex::ExperimentResult r = nlex::run_experiment(c);
    nlex::ReportFormat fmt = format == "csv"    ? nlex::ReportFormat::csv
                             : format == "json" ? nlex::ReportFormat::json
                                                : nlex::ReportFormat::both;
    auto files = nlex::emit_report(r, c, out, fmt);
    if (!quiet) {
      std::cout << (r.report.pass ? "PASS" : "FAIL") << ' ' << r.report.experiment << ": " << r.report.assertion;
      if (!r.report.gammas.empty() && r.report.experiment != "mesh" && r.report.experiment != "solve")
        std::cout << " (slope " << r.report.fitted_slope << ")";
      std::cout << '\n';
      if (!r.error.empty()) std::cout << "error: " << r.error << '\n';
      for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
    }
    return r.report.pass ? 0 : 1;
  } catch (const nlex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlex::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  }
}
