#pragma once
// Dense double-precision inner-loop kernels.
//
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2, a vectorized variant. The public entry points dispatch through
// function pointers chosen once at startup; tests compare both backends
// on random inputs.

#include <cstddef>

namespace stpudgat::kernels {

// Scalar reference kernels. Always available; the ground truth the SIMD
// variants are checked against.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void leaky_relu(const double* a, double slope, double* out, std::size_t n);
// out[i] += g[i] * (a[i] > 0 ? 1 : slope)
void leaky_relu_grad(const double* a, double slope, const double* g,
                     double* out, std::size_t n);
void adam_update(double* param, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define STPUDGAT_HAVE_AVX2_BACKEND 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void leaky_relu(const double* a, double slope, double* out, std::size_t n);
void leaky_relu_grad(const double* a, double slope, const double* g,
                     double* out, std::size_t n);
void adam_update(double* param, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2);
}  // namespace avx2
#endif

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double s, double* out, std::size_t n);
void leaky_relu(const double* a, double slope, double* out, std::size_t n);
void leaky_relu_grad(const double* a, double slope, const double* g,
                     double* out, std::size_t n);
void adam_update(double* param, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2);

// Name of the backend selected at startup ("avx2" or "scalar").
const char* active_backend();
// Force a backend by name; used by the equivalence tests. Returns false if
// the backend is unavailable on this machine.
bool set_backend(const char* name);

// Row-major GEMM built on the dispatched kernels.
// C (m x n) += A (m x k) * B (k x n)
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n);
// C (m x k) += A (m x n) * B^T, B is (k x n)
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k);
// C (k x n) += A^T * B, A is (m x k), B is (m x n)
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n);

}  // namespace stpudgat::kernels
