// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "dhp/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <cmath>

namespace dhp::simd {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8)
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  float sum = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void rmsprop_avx2(float* p, float* sq, const float* g, std::size_t n, float lr, float decay,
                  float eps) {
  const float keep = 1.0f - decay;
  const __m256 vd = _mm256_set1_ps(decay);
  const __m256 vk = _mm256_set1_ps(keep);
  const __m256 ve = _mm256_set1_ps(eps);
  const __m256 vlr = _mm256_set1_ps(lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vg = _mm256_loadu_ps(g + i);
    __m256 vs = _mm256_mul_ps(vd, _mm256_loadu_ps(sq + i));
    vs = _mm256_add_ps(vs, _mm256_mul_ps(vk, _mm256_mul_ps(vg, vg)));
    _mm256_storeu_ps(sq + i, vs);
    __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, vg), _mm256_sqrt_ps(_mm256_add_ps(vs, ve)));
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
  }
  for (; i < n; ++i) {
    sq[i] = decay * sq[i] + keep * g[i] * g[i];
    p[i] -= lr * g[i] / std::sqrt(sq[i] + eps);
  }
}

void rmsprop_avx2(double* p, double* sq, const double* g, std::size_t n, double lr,
                  double decay, double eps) {
  const double keep = 1.0 - decay;
  const __m256d vd = _mm256_set1_pd(decay);
  const __m256d vk = _mm256_set1_pd(keep);
  const __m256d ve = _mm256_set1_pd(eps);
  const __m256d vlr = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vs = _mm256_mul_pd(vd, _mm256_loadu_pd(sq + i));
    vs = _mm256_add_pd(vs, _mm256_mul_pd(vk, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(sq + i, vs);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, vg), _mm256_sqrt_pd(_mm256_add_pd(vs, ve)));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    sq[i] = decay * sq[i] + keep * g[i] * g[i];
    p[i] -= lr * g[i] / std::sqrt(sq[i] + eps);
  }
}

}  // namespace

const KernelTable* avx2_kernels_impl() {
  static const KernelTable table{
      "avx2",
      static_cast<float (*)(const float*, const float*, std::size_t)>(&dot_avx2),
      static_cast<double (*)(const double*, const double*, std::size_t)>(&dot_avx2),
      static_cast<void (*)(float, const float*, float*, std::size_t)>(&axpy_avx2),
      static_cast<void (*)(double, const double*, double*, std::size_t)>(&axpy_avx2),
      static_cast<void (*)(float*, float*, const float*, std::size_t, float, float, float)>(
          &rmsprop_avx2),
      static_cast<void (*)(double*, double*, const double*, std::size_t, double, double,
                           double)>(&rmsprop_avx2),
  };
  return &table;
}

}  // namespace dhp::simd

#else

namespace dhp::simd {
const KernelTable* avx2_kernels_impl() { return nullptr; }
}  // namespace dhp::simd

#endif
