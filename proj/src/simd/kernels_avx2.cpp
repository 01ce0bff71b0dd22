// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only called after the
// runtime CPU check in dispatch.cpp.
#include <immintrin.h>

#include <array>
#include <cmath>
#include <vector>

#include "nlex/bessel.hpp"
#include "nlex/quadrature.hpp"
#include "nlex/simd.hpp"

namespace nlex::simd::detail {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr int kSeries = 16;

struct Coeffs {
  std::array<double, kSeries> i0, p0, i1, p1;
  std::vector<double> a0, a1;  // asymptotic series in 1/z
};

const Coeffs& coeffs() {
  static const Coeffs c = [] {
    Coeffs s{};
    double fact = 1.0, H = 0.0;
    for (int k = 0; k < kSeries; ++k) {
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
    // Truncate where the term at z = 20 drops below 1e-18.
    double t0 = 1.0, t1 = 1.0;
    s.a0.push_back(1.0);
    s.a1.push_back(1.0);
    for (int k = 1; k < 60; ++k) {
      double odd = (2.0 * k - 1.0) * (2.0 * k - 1.0);
      t0 *= -odd / (8.0 * k);
      t1 *= (4.0 - odd) / (8.0 * k);
      s.a0.push_back(t0);
      s.a1.push_back(t1);
      double zk = std::pow(kBesselAsymptoticMin, k);
      if (std::abs(t0) / zk < 1e-18 && std::abs(t1) / zk < 1e-18) break;
    }
    return s;
  }();
  return c;
}

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

template <std::size_t N>
inline __m256d horner(const std::array<double, N>& c, __m256d t) {
  __m256d s = set1(c[N - 1]);
  for (std::size_t k = N - 1; k-- > 0;) s = _mm256_fmadd_pd(s, t, set1(c[k]));
  return s;
}

inline __m256d horner(const std::vector<double>& c, __m256d t) {
  __m256d s = set1(c.back());
  for (std::size_t k = c.size() - 1; k-- > 0;) s = _mm256_fmadd_pd(s, t, set1(c[k]));
  return s;
}

// exp for x in roughly [-745, 709]; flushes to zero below 2^-1022.
inline __m256d vexp(__m256d x) {
  const __m256d log2e = set1(1.4426950408889634074);
  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, set1(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, set1(kLn2Lo), r);
  // Taylor to degree 13 on |r| <= ln2 / 2.
  __m256d p = set1(1.0 / 6227020800.0);
  static const double inv_fact[13] = {1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
                                      1.0 / 362880.0,    1.0 / 40320.0,    1.0 / 5040.0,
                                      1.0 / 720.0,       1.0 / 120.0,      1.0 / 24.0,
                                      1.0 / 6.0,         0.5,              1.0,
                                      1.0};
  for (double c : inv_fact) p = _mm256_fmadd_pd(p, r, set1(c));
  __m256d under = _mm256_cmp_pd(n, set1(-1022.0), _CMP_LT_OQ);
  n = _mm256_max_pd(n, set1(-1022.0));
  n = _mm256_min_pd(n, set1(1023.0));
  __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i e = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(ni), _mm256_set1_epi64x(1023)), 52);
  __m256d res = _mm256_mul_pd(p, _mm256_castsi256_pd(e));
  return _mm256_andnot_pd(under, res);
}

// Natural log for positive normal x.
inline __m256d vlog(__m256d x) {
  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  __m256i mant_bits = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                       _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);  // [1, 2)
  // Exponent to double: the biased exponent fits in 32 bits.
  alignas(32) long long ev[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(ev), expo);
  __m256d e = _mm256_set_pd(double(ev[3] - 1023), double(ev[2] - 1023), double(ev[1] - 1023),
                            double(ev[0] - 1023));
  __m256d big = _mm256_cmp_pd(m, set1(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, set1(1.0)));
  __m256d s = _mm256_div_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_add_pd(m, set1(1.0)));
  __m256d s2 = _mm256_mul_pd(s, s);
  __m256d p = set1(1.0 / 23.0);
  for (int k = 10; k >= 0; --k) p = _mm256_fmadd_pd(p, s2, set1(1.0 / (2 * k + 1)));
  __m256d lm = _mm256_mul_pd(_mm256_add_pd(s, s), p);
  return _mm256_fmadd_pd(e, set1(kLn2Hi), _mm256_fmadd_pd(e, set1(kLn2Lo), lm));
}

void series4(__m256d z, __m256d& k0, __m256d& k1) {
  const Coeffs& c = coeffs();
  __m256d t = _mm256_mul_pd(set1(0.25), _mm256_mul_pd(z, z));
  __m256d lg = _mm256_add_pd(_mm256_sub_pd(vlog(z), set1(kLn2Hi + kLn2Lo)), set1(kEulerGamma));
  k0 = _mm256_fmsub_pd(_mm256_sub_pd(_mm256_setzero_pd(), lg), horner(c.i0, t),
                       _mm256_sub_pd(_mm256_setzero_pd(), horner(c.p0, t)));
  __m256d inner = _mm256_fmsub_pd(lg, horner(c.i1, t), horner(c.p1, t));
  k1 = _mm256_fmadd_pd(_mm256_mul_pd(set1(0.5), z), inner, _mm256_div_pd(set1(1.0), z));
}

void cheb4(__m256d z, __m256d& k0, __m256d& k1) {
  const ChebTables& tab = cheb_tables();
  __m256d fl = _mm256_floor_pd(z);
  fl = _mm256_min_pd(fl, set1(2.0 + kChebIntervals - 1));
  __m256d u = _mm256_sub_pd(_mm256_mul_pd(set1(2.0), _mm256_sub_pd(z, fl)), set1(1.0));
  __m128i iv = _mm256_cvtpd_epi32(_mm256_sub_pd(fl, set1(2.0)));
  __m256i base = _mm256_mullo_epi32(_mm256_cvtepi32_epi64(iv), _mm256_set1_epi64x(kChebDegree));
  __m256d u2 = _mm256_add_pd(u, u);
  __m256d b1a = _mm256_setzero_pd(), b2a = b1a, b1b = b1a, b2b = b1a;
  for (int k = kChebDegree - 1; k >= 1; --k) {
    __m256i idx = _mm256_add_epi64(base, _mm256_set1_epi64x(k));
    __m256d ca = _mm256_i64gather_pd(tab.k0, idx, 8);
    __m256d cb = _mm256_i64gather_pd(tab.k1, idx, 8);
    __m256d ta = _mm256_add_pd(_mm256_fmsub_pd(u2, b1a, b2a), ca);
    __m256d tb = _mm256_add_pd(_mm256_fmsub_pd(u2, b1b, b2b), cb);
    b2a = b1a;
    b1a = ta;
    b2b = b1b;
    b1b = tb;
  }
  __m256d c0a = _mm256_i64gather_pd(tab.k0, base, 8);
  __m256d c0b = _mm256_i64gather_pd(tab.k1, base, 8);
  k0 = _mm256_add_pd(_mm256_fmsub_pd(u, b1a, b2a), c0a);
  k1 = _mm256_add_pd(_mm256_fmsub_pd(u, b1b, b2b), c0b);
}

void asym4(__m256d z, __m256d& k0, __m256d& k1) {
  const Coeffs& c = coeffs();
  __m256d w = _mm256_div_pd(set1(1.0), z);
  __m256d pre = _mm256_sqrt_pd(_mm256_mul_pd(set1(0.5 * kPi), w));
  k0 = _mm256_mul_pd(pre, horner(c.a0, w));
  k1 = _mm256_mul_pd(pre, horner(c.a1, w));
}

}  // namespace

void bessel_k01_avx2(const double* z, std::size_t n, double* k0, double* k1, bool scaled) {
  (void)coeffs();
  (void)cheb_tables();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d zv = _mm256_loadu_pd(z + i);
    __m256d lo = _mm256_cmp_pd(zv, set1(kBesselSeriesMax), _CMP_LE_OQ);
    __m256d hi = _mm256_cmp_pd(zv, set1(kBesselAsymptoticMin), _CMP_GT_OQ);
    __m256d pos = _mm256_cmp_pd(zv, _mm256_setzero_pd(), _CMP_GT_OQ);
    int mlo = _mm256_movemask_pd(lo), mhi = _mm256_movemask_pd(hi), mpos = _mm256_movemask_pd(pos);
    __m256d a, b;
    if (mpos != 0xF) {
      bessel_k01_scalar(z + i, 4, k0 + i, k1 + i, scaled);  // raises the domain error
      continue;
    }
    if (mlo == 0xF) {
      series4(zv, a, b);
      if (scaled) {
        __m256d e = vexp(zv);
        a = _mm256_mul_pd(a, e);
        b = _mm256_mul_pd(b, e);
      }
    } else if (mhi == 0xF) {
      asym4(zv, a, b);
    } else if (mlo == 0 && mhi == 0) {
      cheb4(zv, a, b);
    } else {
      bessel_k01_scalar(z + i, 4, k0 + i, k1 + i, scaled);
      continue;
    }
    if (!scaled && mlo != 0xF) {
      __m256d e = vexp(_mm256_sub_pd(_mm256_setzero_pd(), zv));
      a = _mm256_mul_pd(a, e);
      b = _mm256_mul_pd(b, e);
    }
    _mm256_storeu_pd(k0 + i, a);
    _mm256_storeu_pd(k1 + i, b);
  }
  if (i < n) bessel_k01_scalar(z + i, n - i, k0 + i, k1 + i, scaled);
}

void lagrange_accumulate_avx2(const double* u, std::size_t m, const LagrangeSums& s) {
  static_assert(kPanelOrder == 16, "AVX2 accumulation assumes 16 nodes");
  const PanelRule& r = panel_rule();
  __m256d xs[4], bs[4];
  for (int v = 0; v < 4; ++v) {
    xs[v] = _mm256_loadu_pd(r.x.data() + 4 * v);
    bs[v] = _mm256_loadu_pd(r.bary.data() + 4 * v);
  }
  __m256d acc[3][4];
  for (int c = 0; c < 3; ++c)
    for (int v = 0; v < 4; ++v)
      acc[c][v] = s.f[c] ? _mm256_loadu_pd(s.w[c] + 4 * v) : _mm256_setzero_pd();

  for (std::size_t q = 0; q < m; ++q) {
    __m256d uq = set1(u[q]);
    __m256d d[4];
    int hit = 0;
    for (int v = 0; v < 4; ++v) {
      d[v] = _mm256_sub_pd(uq, xs[v]);
      hit |= _mm256_movemask_pd(_mm256_cmp_pd(d[v], _mm256_setzero_pd(), _CMP_EQ_OQ));
    }
    if (hit) {
      // Exactly on a node: the basis is a Kronecker delta.
      for (int c = 0; c < 3; ++c)
        for (int v = 0; v < 4; ++v)
          if (s.f[c]) _mm256_storeu_pd(s.w[c] + 4 * v, acc[c][v]);
      LagrangeSums one = s;
      for (int c = 0; c < 3; ++c)
        if (s.f[c]) one.f[c] = s.f[c] + q;
      lagrange_accumulate_scalar(u + q, 1, one);
      for (int c = 0; c < 3; ++c)
        for (int v = 0; v < 4; ++v)
          if (s.f[c]) acc[c][v] = _mm256_loadu_pd(s.w[c] + 4 * v);
      continue;
    }
    __m256d qv[4];
    for (int v = 0; v < 4; ++v) qv[v] = _mm256_div_pd(bs[v], d[v]);
    __m256d sum = _mm256_add_pd(_mm256_add_pd(qv[0], qv[1]), _mm256_add_pd(qv[2], qv[3]));
    __m128d h = _mm_add_pd(_mm256_castpd256_pd128(sum), _mm256_extractf128_pd(sum, 1));
    double tot = _mm_cvtsd_f64(_mm_add_sd(h, _mm_unpackhi_pd(h, h)));
    double inv = 1.0 / tot;
    for (int c = 0; c < 3; ++c) {
      if (!s.f[c]) continue;
      __m256d sc = set1(s.f[c][q] * inv);
      for (int v = 0; v < 4; ++v) acc[c][v] = _mm256_fmadd_pd(sc, qv[v], acc[c][v]);
    }
  }
  for (int c = 0; c < 3; ++c)
    if (s.f[c])
      for (int v = 0; v < 4; ++v) _mm256_storeu_pd(s.w[c] + 4 * v, acc[c][v]);
}

}  // namespace nlex::simd::detail
