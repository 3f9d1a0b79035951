#include "stpudgat/kernels.hpp"

#include <cstring>

namespace stpudgat::kernels {

namespace {

struct Backend {
  const char* name;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(const double*, double, double*, std::size_t);
  void (*leaky_relu)(const double*, double, double*, std::size_t);
  void (*leaky_relu_grad)(const double*, double, const double*, double*,
                          std::size_t);
  void (*adam_update)(double*, double*, double*, const double*, std::size_t,
                      double, double, double, double, double, double);
};

constexpr Backend kScalar = {
    "scalar",          scalar::dot,        scalar::axpy,
    scalar::add,       scalar::mul,        scalar::scale,
    scalar::leaky_relu, scalar::leaky_relu_grad, scalar::adam_update};

#ifdef STPUDGAT_HAVE_AVX2_BACKEND
constexpr Backend kAvx2 = {
    "avx2",          avx2::dot,        avx2::axpy,
    avx2::add,       avx2::mul,        avx2::scale,
    avx2::leaky_relu, avx2::leaky_relu_grad, avx2::adam_update};

bool cpu_has_avx2() { return __builtin_cpu_supports("avx2"); }
#endif

const Backend* pick_default() {
#ifdef STPUDGAT_HAVE_AVX2_BACKEND
  if (cpu_has_avx2()) return &kAvx2;
#endif
  return &kScalar;
}

const Backend* g_backend = pick_default();

}  // namespace

const char* active_backend() { return g_backend->name; }

bool set_backend(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    g_backend = &kScalar;
    return true;
  }
#ifdef STPUDGAT_HAVE_AVX2_BACKEND
  if (std::strcmp(name, "avx2") == 0 && cpu_has_avx2()) {
    g_backend = &kAvx2;
    return true;
  }
#endif
  return false;
}

double dot(const double* a, const double* b, std::size_t n) {
  return g_backend->dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  g_backend->axpy(alpha, x, y, n);
}
void add(const double* a, const double* b, double* out, std::size_t n) {
  g_backend->add(a, b, out, n);
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
  g_backend->mul(a, b, out, n);
}
void scale(const double* a, double s, double* out, std::size_t n) {
  g_backend->scale(a, s, out, n);
}
void leaky_relu(const double* a, double slope, double* out, std::size_t n) {
  g_backend->leaky_relu(a, slope, out, n);
}
void leaky_relu_grad(const double* a, double slope, const double* g,
                     double* out, std::size_t n) {
  g_backend->leaky_relu_grad(a, slope, g, out, n);
}
void adam_update(double* param, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2) {
  g_backend->adam_update(param, m, v, g, n, lr, beta1, beta2, eps, bias1,
                         bias2);
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      axpy(arow[l], b + l * n, crow, n);
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      crow[j] += dot(arow, b + j * n, n);
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      axpy(arow[l], brow, c + l * n, n);
    }
  }
}

}  // namespace stpudgat::kernels
