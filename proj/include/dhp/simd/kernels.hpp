#pragma once
// Data-parallel inner loops used by the network and the map builders.
//
// Every kernel has a portable scalar reference and, where the CPU supports it,
// an AVX2+FMA variant. The active table is picked once at first use from the
// CPU feature flags; setting DHP_SIMD=scalar in the environment forces the
// reference path. Variants agree up to float reassociation, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace dhp::simd {

struct KernelTable {
  std::string_view name;

  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  double (*dot_f64)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
  void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);

  // sq = decay*sq + (1-decay)*g^2 ; p -= lr * g / sqrt(sq + eps)
  void (*rmsprop_f32)(float* p, float* sq, const float* g, std::size_t n,
                      float lr, float decay, float eps);
  void (*rmsprop_f64)(double* p, double* sq, const double* g, std::size_t n,
                      double lr, double decay, double eps);
};

const KernelTable& scalar_kernels();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_kernels();

const KernelTable& active_kernels();

// Typed front ends over the active table.
inline float dot(std::span<const float> a, std::span<const float> b) {
  return active_kernels().dot_f32(a.data(), b.data(), a.size());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot_f64(a.data(), b.data(), a.size());
}
inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  active_kernels().axpy_f32(alpha, x.data(), y.data(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy_f64(alpha, x.data(), y.data(), x.size());
}
inline void rmsprop(std::span<float> p, std::span<float> sq, std::span<const float> g,
                    float lr, float decay, float eps) {
  active_kernels().rmsprop_f32(p.data(), sq.data(), g.data(), p.size(), lr, decay, eps);
}
inline void rmsprop(std::span<double> p, std::span<double> sq, std::span<const double> g,
                    double lr, double decay, double eps) {
  active_kernels().rmsprop_f64(p.data(), sq.data(), g.data(), p.size(), lr, decay, eps);
}

}  // namespace dhp::simd
