#include "geosched/kernels.hpp"

#include <atomic>
#include <cstdlib>

#if defined(GEOSCHED_HAVE_AVX2_KERNELS)
#include <immintrin.h>
#endif

namespace geosched::kern {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b ? b[r] : 0.0;
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  // Row-major friendly: walk rows and accumulate g[r] * row_r into out.
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * wr[c];
  }
}

void ger_acc(double* g_mat, std::size_t rows, std::size_t cols,
             const double* g, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    double gr = g[r];
    double* row = g_mat + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

}  // namespace scalar

#if defined(GEOSCHED_HAVE_AVX2_KERNELS)
namespace avx2 {

bool supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

__attribute__((target("avx2,fma"))) static inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

__attribute__((target("avx2,fma"))) double dot(const double* a,
                                               const double* b,
                                               std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

__attribute__((target("avx2,fma"))) void axpy(double a, const double* x,
                                              double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma"))) void matvec(const double* w,
                                                std::size_t rows,
                                                std::size_t cols,
                                                const double* x,
                                                const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(wr + c), _mm256_loadu_pd(x + c),
                            acc);
    }
    double s = hsum(acc);
    for (; c < cols; ++c) s += wr[c] * x[c];
    y[r] = s + (b ? b[r] : 0.0);
  }
}

__attribute__((target("avx2,fma"))) void matvec_t(const double* w,
                                                  std::size_t rows,
                                                  std::size_t cols,
                                                  const double* g,
                                                  double* out) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    axpy(g[r], w + r * cols, out, cols);
  }
}

__attribute__((target("avx2,fma"))) void ger_acc(double* g_mat,
                                                 std::size_t rows,
                                                 std::size_t cols,
                                                 const double* g,
                                                 const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    axpy(g[r], x, g_mat + r * cols, cols);
  }
}

}  // namespace avx2
#endif  // GEOSCHED_HAVE_AVX2_KERNELS

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*,
                 const double*, double*);
  void (*matvec_t)(const double*, std::size_t, std::size_t, const double*,
                   double*);
  void (*ger_acc)(double*, std::size_t, std::size_t, const double*,
                  const double*);
  const char* name;
};

constexpr Table kScalarTable = {scalar::dot, scalar::axpy, scalar::matvec,
                                scalar::matvec_t, scalar::ger_acc, "scalar"};

#if defined(GEOSCHED_HAVE_AVX2_KERNELS)
constexpr Table kAvx2Table = {avx2::dot, avx2::axpy, avx2::matvec,
                              avx2::matvec_t, avx2::ger_acc, "avx2"};
#endif

const Table* detect() {
  if (const char* env = std::getenv("GEOSCHED_FORCE_SCALAR");
      env && env[0] == '1') {
    return &kScalarTable;
  }
#if defined(GEOSCHED_HAVE_AVX2_KERNELS)
  if (avx2::supported()) return &kAvx2Table;
#endif
  return &kScalarTable;
}

std::atomic<const Table*> g_active{nullptr};

const Table& tab() {
  const Table* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = detect();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

}  // namespace

void force_scalar(bool on) {
  g_active.store(on ? &kScalarTable : detect(), std::memory_order_release);
}

const char* active_isa() { return tab().name; }

double dot(const double* a, const double* b, std::size_t n) {
  return tab().dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  tab().axpy(a, x, y, n);
}

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* y) {
  tab().matvec(w, rows, cols, x, b, y);
}

void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out) {
  tab().matvec_t(w, rows, cols, g, out);
}

void ger_acc(double* g_mat, std::size_t rows, std::size_t cols,
             const double* g, const double* x) {
  tab().ger_acc(g_mat, rows, cols, g, x);
}

}  // namespace geosched::kern
