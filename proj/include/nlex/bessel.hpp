// Modified Bessel functions K0, K1 and the Yukawa kernels built from them.
#pragma once

#include "nlex/common.hpp"

namespace nlex {

enum class BesselRegime { series, intermediate, asymptotic };

// Regime switch points.
inline constexpr double kBesselSeriesMax = 2.0;
inline constexpr double kBesselAsymptoticMin = 20.0;

struct KernelEval {
  double value;
  double scaled_value;  // value * exp(z)
  BesselRegime regime;
};

struct BesselPair {
  double k0;
  double k1;
};

BesselRegime bessel_regime(double z);

// All functions throw DomainError for z <= 0 (or NaN).
double bessel_k0(double z);
double bessel_k1(double z);
double bessel_k0_scaled(double z);
double bessel_k1_scaled(double z);
KernelEval bessel_k0_eval(double z);
KernelEval bessel_k1_eval(double z);

// exp(z) * (K0(z), K1(z)) from the regime chosen by z.
BesselPair bessel_k01_scaled(double z);

// Forced-regime evaluations, exposed for continuity checks at the switch points.
BesselPair bessel_k01_scaled_series(double z);
BesselPair bessel_k01_scaled_cf(double z);
BesselPair bessel_k01_scaled_asymptotic(double z);

// (1 / 2 pi) K0(|x| / gamma). Throws DomainError at x = 0 or gamma <= 0.
double fundamental_solution(const Point& x, double gamma);

// 2 d/dn_x G(x - y) = -(1 / (pi gamma)) K1(r / gamma) (x - y).n_x / r.
double np_kernel(const Point& x, const Point& n_x, const Point& y, double gamma);

}  // namespace nlex
