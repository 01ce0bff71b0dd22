// Experiment configuration, sweep driver and report emission.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nlex/io.hpp"
#include "nlex/rates.hpp"

namespace nlex {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { mesh, spectrum, exchange_rate, dtn_rate, scattering_rate, counterexample, solve };

std::string to_string(ExperimentKind k);
// Throws ConfigError on an unknown name.
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ExperimentKind kind = ExperimentKind::exchange_rate;
  Json geometry;  // CurveSpec JSON; for `solve` a partition name or object
  std::vector<double> gammas;
  std::size_t nodes = 0;  // 0 picks 1024 on smooth curves, 2048 on polygons
  Json grading;           // null: dyadic on polygons, uniform otherwise
  double M = 4.0;
  double a = 0.5;
  std::vector<double> s_values{-0.5};
  int drop = 1;
  std::uint64_t seed = 0;
  int draws = 8;
  Json options = Json::object();  // kind-specific settings, see README
};

// Validates the schema. Throws ConfigError with a field-level message.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);
// The acceptance-scale configuration for each kind.
ExperimentConfig default_config(ExperimentKind k);
// 16 hex digits of FNV-1a over the canonical JSON of the configuration.
std::string config_hash(const ExperimentConfig& c);

struct ExperimentResult {
  RateReport report;
  Json extra = Json::object();  // kind-specific payload (spectra, history, ...)
  std::string error;            // set when the run stopped on an exception
};

// Never throws for numerical failures: they become a failing report with
// `error` set. Invalid configurations still throw ConfigError.
ExperimentResult run_experiment(const ExperimentConfig& c);

// Full report. The timestamp field is left out when `timestamp` is false.
Json report_to_json(const ExperimentResult& r, const ExperimentConfig& c, bool timestamp = true);
// Header "gamma,defect,<columns...>", one row per gamma, 17 significant digits.
std::string report_to_csv(const ExperimentResult& r);
RateReport report_from_json(const Json& j);

enum class ReportFormat { csv, json, both };

// Writes <dir>/<experiment>.json and/or .csv (plus history.csv for `solve`).
// Throws IoError when the directory or a file cannot be written.
std::vector<std::filesystem::path> emit_report(const ExperimentResult& r, const ExperimentConfig& c,
                                               const std::filesystem::path& dir, ReportFormat fmt);

struct SnapshotDiff {
  std::string field;
  std::size_t index = 0;
  double expected = 0.0;
  double actual = 0.0;
  double relative = 0.0;
};

// Per-gamma numbers (defects and extra columns) whose relative deviation from
// the baseline exceeds `rel_tol`; a length mismatch is reported as well.
std::vector<SnapshotDiff> compare_snapshot(const Json& report, const Json& baseline, double rel_tol = 1e-8);

}  // namespace nlex
