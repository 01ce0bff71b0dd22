// Separation-of-variables eigenvalues for the Yukawa operators on the disc of
// radius R, built on Boost.Math Bessel functions (x = R / gamma).
#pragma once

#include <boost/math/special_functions/bessel.hpp>

namespace oracle {

inline double I(int n, double x) { return boost::math::cyl_bessel_i(n, x); }
inline double K(int n, double x) { return boost::math::cyl_bessel_k(n, x); }
inline double dI(int n, double x) { return I(n + 1, x) + n / x * I(n, x); }
inline double dK(int n, double x) { return -K(n + 1, x) + n / x * K(n, x); }

// V e^{in theta} = R I_n(x) K_n(x) e^{in theta}
inline double disc_single_layer(int n, double R, double g) { return R * I(n, R / g) * K(n, R / g); }
// (1/2 + K') e^{in theta} = x I_n'(x) K_n(x) e^{in theta}
inline double disc_interior_jump(int n, double R, double g) {
  const double x = R / g;
  return x * dI(n, x) * K(n, x);
}
inline double disc_dtn_interior(int n, double R, double g) { return dI(n, R / g) / I(n, R / g); }
inline double disc_dtn_exterior(int n, double R, double g) { return -dK(n, R / g) / K(n, R / g); }
// A = 2 K' with the exterior normal = -2 K'_interior = -2 (jump - 1/2).
inline double disc_a_operator(int n, double R, double g) { return -2.0 * (disc_interior_jump(n, R, g) - 0.5); }

}  // namespace oracle
