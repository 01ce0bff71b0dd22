// Batched hot loops with a scalar reference and an AVX2 variant chosen at
// runtime. Set NLEX_SIMD=scalar to force the reference path.
#pragma once

#include <cstddef>

namespace nlex::simd {

enum class Isa { scalar, avx2 };

bool avx2_supported();
Isa active_isa();
// Overrides the runtime choice; requesting avx2 on a CPU without it throws.
void set_isa(Isa isa);
const char* isa_name(Isa isa);

// k0[i], k1[i] = K0(z[i]), K1(z[i]), multiplied by exp(z[i]) when scaled.
// Every z[i] must be positive.
void bessel_k01(const double* z, std::size_t n, double* k0, double* k1, bool scaled);
void bessel_k01(const double* z, std::size_t n, double* k0, double* k1, bool scaled, Isa isa);

// For c in {0, 1, 2} with fc non-null: wc[j] += sum_m fc[m] * l_j(u[m]),
// l_j the Lagrange basis on the 16 panel nodes, u[m] in [-1, 1].
struct LagrangeSums {
  const double* f[3] = {nullptr, nullptr, nullptr};
  double* w[3] = {nullptr, nullptr, nullptr};
};
void lagrange_accumulate(const double* u, std::size_t m, const LagrangeSums& s);
void lagrange_accumulate(const double* u, std::size_t m, const LagrangeSums& s, Isa isa);

namespace detail {
void bessel_k01_scalar(const double* z, std::size_t n, double* k0, double* k1, bool scaled);
void bessel_k01_avx2(const double* z, std::size_t n, double* k0, double* k1, bool scaled);
void lagrange_accumulate_scalar(const double* u, std::size_t m, const LagrangeSums& s);
void lagrange_accumulate_avx2(const double* u, std::size_t m, const LagrangeSums& s);

// Chebyshev fits of exp(z) K0, exp(z) K1 on unit intervals of [2, 20],
// generated from the scalar continued-fraction path.
inline constexpr int kChebDegree = 20;
inline constexpr int kChebIntervals = 18;
struct ChebTables {
  alignas(32) double k0[kChebIntervals * kChebDegree];
  alignas(32) double k1[kChebIntervals * kChebDegree];
};
const ChebTables& cheb_tables();
}  // namespace detail

}  // namespace nlex::simd
