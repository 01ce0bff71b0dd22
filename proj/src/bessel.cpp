#include "nlex/bessel.hpp"

#include <array>
#include <cmath>

namespace nlex {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr int kSeriesTerms = 16;

struct SeriesCoeffs {
  // K0 = -(ln(z/2) + gE) * sum i0[k] t^k + sum p0[k] t^k,  t = z^2 / 4
  // K1 = 1/z + (z/2) [ (ln(z/2) + gE) * sum i1[k] t^k - sum p1[k] t^k ]
  std::array<double, kSeriesTerms> i0, p0, i1, p1;
};

const SeriesCoeffs& series_coeffs() {
  static const SeriesCoeffs c = [] {
    SeriesCoeffs s{};
    double fact = 1.0, H = 0.0;
    for (int k = 0; k < kSeriesTerms; ++k) {
      if (k > 0) {
        fact *= k;
        H += 1.0 / k;
      }
      double Hn = H + 1.0 / (k + 1);
      s.i0[k] = 1.0 / (fact * fact);
      s.p0[k] = H / (fact * fact);
      s.i1[k] = 1.0 / (fact * fact * (k + 1));
      s.p1[k] = 0.5 * (H + Hn) / (fact * fact * (k + 1));
    }
    return s;
  }();
  return c;
}

template <std::size_t N>
double horner(const std::array<double, N>& c, double t) {
  double s = c[N - 1];
  for (std::size_t k = N - 1; k-- > 0;) s = s * t + c[k];
  return s;
}

void check_arg(double z) {
  if (!(z > 0)) throw DomainError("modified Bessel K: argument must be positive");
}

}  // namespace

BesselRegime bessel_regime(double z) {
  if (z <= kBesselSeriesMax) return BesselRegime::series;
  if (z <= kBesselAsymptoticMin) return BesselRegime::intermediate;
  return BesselRegime::asymptotic;
}

BesselPair bessel_k01_scaled_series(double z) {
  check_arg(z);
  const SeriesCoeffs& c = series_coeffs();
  double t = 0.25 * z * z;
  double lg = std::log(0.5 * z) + kEulerGamma;
  double k0 = -lg * horner(c.i0, t) + horner(c.p0, t);
  double k1 = 1.0 / z + 0.5 * z * (lg * horner(c.i1, t) - horner(c.p1, t));
  double e = std::exp(z);
  return {k0 * e, k1 * e};
}

// Steed's algorithm for the second continued fraction (Temme's CF2), order 0.
BesselPair bessel_k01_scaled_cf(double z) {
  check_arg(z);
  double b = 2.0 * (1.0 + z), d = 1.0 / b, h = d, delh = d;
  double q1 = 0.0, q2 = 1.0, a1 = 0.25, q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 100000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 1e-17) break;
  }
  h = a1 * h;
  double k0 = std::sqrt(kPi / (2.0 * z)) / s;
  double k1 = k0 * (z + 0.5 - h) / z;
  return {k0, k1};
}

BesselPair bessel_k01_scaled_asymptotic(double z) {
  check_arg(z);
  // sum_k a_k(nu) / z^k with a_k = prod_{j<=k} (4 nu^2 - (2j-1)^2) / (k! 8^k)
  double t0 = 1.0, t1 = 1.0, s0 = 1.0, s1 = 1.0;
  for (int k = 1; k < 80; ++k) {
    double odd = (2.0 * k - 1.0) * (2.0 * k - 1.0);
    double n0 = t0 * (0.0 - odd) / (k * 8.0 * z);
    double n1 = t1 * (4.0 - odd) / (k * 8.0 * z);
    if (std::abs(n0) > std::abs(t0) && k > 2) break;  // divergent tail
    t0 = n0;
    t1 = n1;
    s0 += t0;
    s1 += t1;
    if (std::abs(t0) < 1e-18 * std::abs(s0) && std::abs(t1) < 1e-18 * std::abs(s1)) break;
  }
  double pre = std::sqrt(kPi / (2.0 * z));
  return {pre * s0, pre * s1};
}

BesselPair bessel_k01_scaled(double z) {
  check_arg(z);
  switch (bessel_regime(z)) {
    case BesselRegime::series:
      return bessel_k01_scaled_series(z);
    case BesselRegime::intermediate:
      return bessel_k01_scaled_cf(z);
    default:
      return bessel_k01_scaled_asymptotic(z);
  }
}

double bessel_k0_scaled(double z) { return bessel_k01_scaled(z).k0; }
double bessel_k1_scaled(double z) { return bessel_k01_scaled(z).k1; }

double bessel_k0(double z) {
  if (z <= kBesselSeriesMax) {
    check_arg(z);
    const SeriesCoeffs& c = series_coeffs();
    double t = 0.25 * z * z;
    return -(std::log(0.5 * z) + kEulerGamma) * horner(c.i0, t) + horner(c.p0, t);
  }
  return bessel_k0_scaled(z) * std::exp(-z);
}

double bessel_k1(double z) {
  if (z <= kBesselSeriesMax) {
    check_arg(z);
    const SeriesCoeffs& c = series_coeffs();
    double t = 0.25 * z * z;
    double lg = std::log(0.5 * z) + kEulerGamma;
    return 1.0 / z + 0.5 * z * (lg * horner(c.i1, t) - horner(c.p1, t));
  }
  return bessel_k1_scaled(z) * std::exp(-z);
}

KernelEval bessel_k0_eval(double z) {
  return {bessel_k0(z), bessel_k0_scaled(z), bessel_regime(z)};
}

KernelEval bessel_k1_eval(double z) {
  return {bessel_k1(z), bessel_k1_scaled(z), bessel_regime(z)};
}

double fundamental_solution(const Point& x, double gamma) {
  if (!(gamma > 0)) throw DomainError("fundamental_solution: gamma must be positive");
  double r = x.norm();
  if (!(r > 0)) throw DomainError("fundamental_solution: singular at x = 0");
  return bessel_k0(r / gamma) / (2.0 * kPi);
}

double np_kernel(const Point& x, const Point& n_x, const Point& y, double gamma) {
  if (!(gamma > 0)) throw DomainError("np_kernel: gamma must be positive");
  Point d = x - y;
  double r = d.norm();
  if (!(r > 0)) throw DomainError("np_kernel: singular at x = y");
  return -bessel_k1(r / gamma) * d.dot(n_x) / (kPi * gamma * r);
}

}  // namespace nlex
