#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dhp/simd/kernels.hpp"

using namespace dhp::simd;

namespace {

template <class T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = T(u(rng));
  return v;
}

}  // namespace

TEST(Kernels, ActiveTableIsOneOfTheVariants) {
  const KernelTable& a = active_kernels();
  EXPECT_TRUE(&a == &scalar_kernels() || &a == avx2_kernels());
}

TEST(Kernels, DotAgreesWithScalar) {
  const KernelTable* v = avx2_kernels();
  if (!v) GTEST_SKIP() << "no AVX2";
  const KernelTable& s = scalar_kernels();
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 288u, 1000u}) {
    const auto a = random_vec<float>(n, rng), b = random_vec<float>(n, rng);
    const double ref = s.dot_f32(a.data(), b.data(), n);
    EXPECT_NEAR(v->dot_f32(a.data(), b.data(), n), ref, 1e-5 * (1.0 + std::sqrt(double(n)))) << n;
    const auto ad = random_vec<double>(n, rng), bd = random_vec<double>(n, rng);
    EXPECT_NEAR(v->dot_f64(ad.data(), bd.data(), n), s.dot_f64(ad.data(), bd.data(), n), 1e-12 * (1.0 + n)) << n;
  }
}

TEST(Kernels, AxpyAgreesWithScalar) {
  const KernelTable* v = avx2_kernels();
  if (!v) GTEST_SKIP() << "no AVX2";
  const KernelTable& s = scalar_kernels();
  std::mt19937_64 rng(2);
  for (std::size_t n : {0u, 1u, 5u, 8u, 13u, 64u, 257u}) {
    const auto x = random_vec<float>(n, rng);
    auto y1 = random_vec<float>(n, rng);
    auto y2 = y1;
    s.axpy_f32(0.37f, x.data(), y1.data(), n);
    v->axpy_f32(0.37f, x.data(), y2.data(), n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(y1[k], y2[k], 1e-6);
    const auto xd = random_vec<double>(n, rng);
    auto z1 = random_vec<double>(n, rng);
    auto z2 = z1;
    s.axpy_f64(-1.25, xd.data(), z1.data(), n);
    v->axpy_f64(-1.25, xd.data(), z2.data(), n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(z1[k], z2[k], 1e-14);
  }
}

TEST(Kernels, RmspropAgreesWithScalar) {
  const KernelTable* v = avx2_kernels();
  if (!v) GTEST_SKIP() << "no AVX2";
  const KernelTable& s = scalar_kernels();
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 7u, 8u, 100u, 1029u}) {
    auto p1 = random_vec<float>(n, rng), p2 = p1;
    auto sq1 = random_vec<float>(n, rng);
    for (auto& x : sq1) x = std::abs(x);
    auto sq2 = sq1;
    const auto g = random_vec<float>(n, rng);
    s.rmsprop_f32(p1.data(), sq1.data(), g.data(), n, 1e-3f, 0.99f, 0.1f);
    v->rmsprop_f32(p2.data(), sq2.data(), g.data(), n, 1e-3f, 0.99f, 0.1f);
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_NEAR(p1[k], p2[k], 1e-6);
      EXPECT_NEAR(sq1[k], sq2[k], 1e-6);
    }
    auto d1 = random_vec<double>(n, rng), d2 = d1;
    std::vector<double> q1(n, 0.5), q2(n, 0.5);
    const auto gd = random_vec<double>(n, rng);
    s.rmsprop_f64(d1.data(), q1.data(), gd.data(), n, 1e-3, 0.99, 0.1);
    v->rmsprop_f64(d2.data(), q2.data(), gd.data(), n, 1e-3, 0.99, 0.1);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(d1[k], d2[k], 1e-15);
  }
}

TEST(Kernels, ScalarReferenceValues) {
  const KernelTable& s = scalar_kernels();
  const float a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
  EXPECT_EQ(s.dot_f32(a, b, 3), 32.0f);
  float y[3] = {1, 1, 1};
  s.axpy_f32(2.0f, a, y, 3);
  EXPECT_EQ(y[2], 7.0f);
  // sq = 0.99*0 + 0.01*4 = 0.04 ; p -= 0.1 * 2 / sqrt(0.14)
  float p = 1.0f, sq = 0.0f;
  const float g = 2.0f;
  s.rmsprop_f32(&p, &sq, &g, 1, 0.1f, 0.99f, 0.1f);
  EXPECT_NEAR(sq, 0.04f, 1e-7);
  EXPECT_NEAR(p, 1.0f - 0.2f / std::sqrt(0.14f), 1e-6);
}
