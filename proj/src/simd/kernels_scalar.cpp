#include <cmath>

#include "nlex/bessel.hpp"
#include "nlex/quadrature.hpp"
#include "nlex/simd.hpp"

namespace nlex::simd::detail {

void bessel_k01_scalar(const double* z, std::size_t n, double* k0, double* k1, bool scaled) {
  for (std::size_t i = 0; i < n; ++i) {
    BesselPair p = bessel_k01_scaled(z[i]);
    double e = scaled ? 1.0 : std::exp(-z[i]);
    k0[i] = p.k0 * e;
    k1[i] = p.k1 * e;
  }
}

void lagrange_accumulate_scalar(const double* u, std::size_t m, const LagrangeSums& s) {
  double l[kPanelOrder];
  for (std::size_t q = 0; q < m; ++q) {
    lagrange_values(u[q], l);
    for (int c = 0; c < 3; ++c) {
      if (!s.f[c]) continue;
      double f = s.f[c][q];
      for (int j = 0; j < kPanelOrder; ++j) s.w[c][j] += f * l[j];
    }
  }
}

const ChebTables& cheb_tables() {
  static const ChebTables t = [] {
    ChebTables tab{};
    constexpr int N = kChebDegree;
    for (int iv = 0; iv < kChebIntervals; ++iv) {
      double f0[N], f1[N], th[N];
      for (int j = 0; j < N; ++j) {
        th[j] = kPi * (j + 0.5) / N;
        double z = 2.0 + iv + 0.5 * (std::cos(th[j]) + 1.0);
        BesselPair p = bessel_k01_scaled_cf(z);
        f0[j] = p.k0;
        f1[j] = p.k1;
      }
      for (int k = 0; k < N; ++k) {
        double c0 = 0.0, c1 = 0.0;
        for (int j = 0; j < N; ++j) {
          double ck = std::cos(k * th[j]);
          c0 += f0[j] * ck;
          c1 += f1[j] * ck;
        }
        double scale = (k == 0 ? 1.0 : 2.0) / N;
        tab.k0[iv * N + k] = c0 * scale;
        tab.k1[iv * N + k] = c1 * scale;
      }
    }
    return tab;
  }();
  return t;
}

}  // namespace nlex::simd::detail
