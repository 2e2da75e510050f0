#include "dhp/simd/kernels.hpp"

#include <cmath>

namespace dhp::simd {
namespace {

template <class T>
T dot_ref(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
void axpy_ref(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void rmsprop_ref(T* p, T* sq, const T* g, std::size_t n, T lr, T decay, T eps) {
  const T keep = T(1) - decay;
  for (std::size_t i = 0; i < n; ++i) {
    sq[i] = decay * sq[i] + keep * g[i] * g[i];
    p[i] -= lr * g[i] / std::sqrt(sq[i] + eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",
      &dot_ref<float>,     &dot_ref<double>,     &axpy_ref<float>,
      &axpy_ref<double>,   &rmsprop_ref<float>,  &rmsprop_ref<double>,
  };
  return table;
}

}  // namespace dhp::simd
