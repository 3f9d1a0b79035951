#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stpudgat/kernels.hpp"

using namespace stpudgat;

namespace {
std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool close(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace

TEST_CASE("scalar kernel basics") {
  const double a[4] = {1, 2, 3, 4};
  const double b[4] = {4, 3, 2, 1};
  CHECK(kernels::scalar::dot(a, b, 4) == 20.0);

  double y[4] = {0, 0, 0, 0};
  kernels::scalar::axpy(2.0, a, y, 4);
  CHECK(y[3] == 8.0);

  double out[4];
  kernels::scalar::leaky_relu(a, 0.2, out, 4);
  CHECK(out[0] == 1.0);
  const double neg[1] = {-2.0};
  kernels::scalar::leaky_relu(neg, 0.2, out, 1);
  CHECK(out[0] == doctest::Approx(-0.4));
}

#ifdef STPUDGAT_HAVE_AVX2_BACKEND
TEST_CASE("avx2 matches scalar on random inputs") {
  if (!kernels::set_backend("avx2")) {
    MESSAGE("avx2 unavailable on this machine; skipping");
    return;
  }
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 257u}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);

      CHECK(close(kernels::scalar::dot(a.data(), b.data(), n),
                  kernels::avx2::dot(a.data(), b.data(), n)));

      std::vector<double> y1 = b, y2 = b;
      kernels::scalar::axpy(0.37, a.data(), y1.data(), n);
      kernels::avx2::axpy(0.37, a.data(), y2.data(), n);
      std::vector<double> o1(n), o2(n);
      kernels::scalar::mul(a.data(), b.data(), o1.data(), n);
      kernels::avx2::mul(a.data(), b.data(), o2.data(), n);
      std::vector<double> l1(n), l2(n);
      kernels::scalar::leaky_relu(a.data(), 0.2, l1.data(), n);
      kernels::avx2::leaky_relu(a.data(), 0.2, l2.data(), n);
      std::vector<double> g1(n, 0.5), g2(n, 0.5);
      kernels::scalar::leaky_relu_grad(a.data(), 0.2, b.data(), g1.data(), n);
      kernels::avx2::leaky_relu_grad(a.data(), 0.2, b.data(), g2.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(close(y1[i], y2[i]));
        CHECK(close(o1[i], o2[i]));
        CHECK(l1[i] == l2[i]);
        CHECK(close(g1[i], g2[i]));
      }

      // Adam on identical state must stay in lockstep.
      std::vector<double> p1 = a, p2 = a, m1(n, 0.0), m2(n, 0.0), v1(n, 0.0),
                          v2(n, 0.0);
      kernels::scalar::adam_update(p1.data(), m1.data(), v1.data(), b.data(),
                                   n, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001);
      kernels::avx2::adam_update(p2.data(), m2.data(), v2.data(), b.data(), n,
                                 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(p1[i], p2[i]));
    }
  }
}
#endif

TEST_CASE("gemm routes agree with naive matrix products") {
  std::mt19937_64 rng(11);
  const std::size_t m = 5, k = 7, n = 6;
  const auto a = random_vec(m * k, rng);
  const auto b = random_vec(k * n, rng);

  std::vector<double> c(m * n, 0.0);
  kernels::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
      CHECK(close(c[i * n + j], acc));
    }
  }

  // gemm_nt: (m x n) * (k x n)^T
  std::vector<double> d(m * k, 0.0);
  kernels::gemm_nt(c.data(), b.data(), d.data(), m, n, k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < n; ++l) acc += c[i * n + l] * b[j * n + l];
      CHECK(close(d[i * k + j], acc));
    }
  }

  // gemm_tn: (m x k)^T * (m x n)
  std::vector<double> e(k * n, 0.0);
  kernels::gemm_tn(a.data(), c.data(), e.data(), m, k, n);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < m; ++l) acc += a[l * k + i] * c[l * n + j];
      CHECK(close(e[i * n + j], acc));
    }
  }
}
