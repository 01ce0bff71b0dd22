#include "nlex/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlex/common.hpp"

namespace nlex {

SlopeFit fit_slope(const std::vector<double>& gammas, const std::vector<double>& values, int drop) {
  if (gammas.size() != values.size()) throw DomainError("fit_slope: size mismatch");
  if (drop < 0) throw DomainError("fit_slope: negative drop count");
  std::vector<std::size_t> idx(gammas.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return gammas[a] > gammas[b]; });
  if (idx.size() < std::size_t(drop) + 3) throw DomainError("fit_slope: need at least 3 points after dropping");
  std::vector<double> x, y;
  for (std::size_t k = std::size_t(drop); k < idx.size(); ++k) {
    double g = gammas[idx[k]], v = values[idx[k]];
    if (!(g > 0) || !(v > 0)) throw DomainError("fit_slope: gammas and values must be positive");
    x.push_back(std::log10(g));
    y.push_back(std::log10(v));
  }
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0)) throw DomainError("fit_slope: gammas must not all coincide");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double r = y[k] - (f.intercept + f.slope * x[k]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.used = int(x.size());
  return f;
}

void RateReport::fit(int drop) {
  SlopeFit f = fit_slope(gammas, defects, drop);
  fitted_slope = f.slope;
  fit_residual = f.residual;
  dropped_endpoints = drop;
  constant = std::pow(10.0, f.intercept);
}

}  // namespace nlex
