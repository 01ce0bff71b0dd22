// Log-log rate fits and the report type shared by all sweep experiments.
#pragma once

#include <map>
#include <string>
#include <vector>

namespace nlex {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // log10 of the fitted constant
  double residual = 0.0;   // RMS of the log10 residuals
  int used = 0;
};

// Least squares of log10(values) against log10(gammas) after dropping the
// `drop` largest-gamma points. Throws DomainError on non-positive data or
// fewer than three remaining points.
SlopeFit fit_slope(const std::vector<double>& gammas, const std::vector<double>& values, int drop = 0);

struct RateReport {
  std::string experiment;
  std::vector<double> gammas;
  std::vector<double> defects;
  double fitted_slope = 0.0;
  double fit_residual = 0.0;
  int dropped_endpoints = 0;
  double constant = 0.0;  // C in defect ~ C gamma^slope
  // Extra per-gamma columns, e.g. node counts or secondary norms.
  std::map<std::string, std::vector<double>> columns;
  // Scalar diagnostics and fitted constants.
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> metadata;
  std::string assertion;
  bool pass = false;

  void fit(int drop);
};

}  // namespace nlex
