#include "nlex/quadrature.hpp"

#include <cmath>

namespace nlex {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be positive");
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-17) break;
    }
    // Ascending order: the pair is (-x, x).
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  return r;
}

const PanelRule& panel_rule() {
  static const PanelRule rule = [] {
    PanelRule p{};
    GaussRule g = gauss_legendre(kPanelOrder);
    for (int j = 0; j < kPanelOrder; ++j) {
      p.x[j] = g.x[j];
      p.w[j] = g.w[j];
    }
    for (int j = 0; j < kPanelOrder; ++j) {
      double prod = 1.0;
      for (int k = 0; k < kPanelOrder; ++k)
        if (k != j) prod *= (p.x[j] - p.x[k]);
      p.bary[j] = 1.0 / prod;
    }
    // Rescale to O(1) magnitudes; barycentric formulas are scale invariant.
    double m = 0.0;
    for (double b : p.bary) m = std::max(m, std::abs(b));
    for (double& b : p.bary) b /= m;
    return p;
  }();
  return rule;
}

void lagrange_values(double u, double* out) {
  const PanelRule& r = panel_rule();
  for (int j = 0; j < kPanelOrder; ++j) {
    if (u == r.x[j]) {
      for (int k = 0; k < kPanelOrder; ++k) out[k] = (k == j) ? 1.0 : 0.0;
      return;
    }
  }
  double sum = 0.0;
  for (int j = 0; j < kPanelOrder; ++j) {
    out[j] = r.bary[j] / (u - r.x[j]);
    sum += out[j];
  }
  for (int j = 0; j < kPanelOrder; ++j) out[j] /= sum;
}

const Eigen::Matrix<double, kPanelOrder, kPanelOrder>& panel_diff_matrix() {
  static const Eigen::Matrix<double, kPanelOrder, kPanelOrder> D = [] {
    const PanelRule& r = panel_rule();
    Eigen::Matrix<double, kPanelOrder, kPanelOrder> d;
    for (int i = 0; i < kPanelOrder; ++i) {
      double diag = 0.0;
      for (int j = 0; j < kPanelOrder; ++j) {
        if (i == j) continue;
        d(i, j) = (r.bary[j] / r.bary[i]) / (r.x[i] - r.x[j]);
        diag -= d(i, j);
      }
      d(i, i) = diag;
    }
    return d;
  }();
  return D;
}

}  // namespace nlex
