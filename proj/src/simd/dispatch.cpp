#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "nlex/simd.hpp"

namespace nlex::simd {

namespace {

Isa detect() {
  const char* env = std::getenv("NLEX_SIMD");
  if (env && std::string(env) == "scalar") return Isa::scalar;
  return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool avx2_supported() {
#if defined(NLEX_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__)) && \
    (defined(__x86_64__) || defined(__i386__))
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_supported())
    throw std::runtime_error("set_isa: AVX2/FMA not available on this CPU");
  current().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void bessel_k01(const double* z, std::size_t n, double* k0, double* k1, bool scaled, Isa isa) {
#ifdef NLEX_HAVE_AVX2_TU
  if (isa == Isa::avx2) return detail::bessel_k01_avx2(z, n, k0, k1, scaled);
#endif
  (void)isa;
  detail::bessel_k01_scalar(z, n, k0, k1, scaled);
}

void bessel_k01(const double* z, std::size_t n, double* k0, double* k1, bool scaled) {
  bessel_k01(z, n, k0, k1, scaled, active_isa());
}

void lagrange_accumulate(const double* u, std::size_t m, const LagrangeSums& s, Isa isa) {
#ifdef NLEX_HAVE_AVX2_TU
  if (isa == Isa::avx2) return detail::lagrange_accumulate_avx2(u, m, s);
#endif
  (void)isa;
  detail::lagrange_accumulate_scalar(u, m, s);
}

void lagrange_accumulate(const double* u, std::size_t m, const LagrangeSums& s) {
  lagrange_accumulate(u, m, s, active_isa());
}

}  // namespace nlex::simd
