#pragma once

#include <cstddef>

// Small dense-math kernels backing the neural-network code. The policy and
// value networks are tiny (64x64 hidden layers) but their matvec/backprop
// loops run millions of times during training, so each kernel ships in two
// variants: a plain scalar reference and an AVX2+FMA version. The active
// variant is picked once at runtime from CPUID; GEOSCHED_FORCE_SCALAR=1 in
// the environment (or force_scalar(true) in tests) pins the reference path.
//
// All matrices are row-major doubles. The scalar variants are the ground
// truth; the vector variants must agree with them to within accumulation
// reordering (tested in tests/test_kernels.cpp).

namespace geosched::kern {

// y = W x + b. W is rows x cols, b may be nullptr.
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* y);

// out = W^T g (backprop through a dense layer). W is rows x cols, g has
// rows entries, out has cols entries. out is overwritten.
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out);

// G += g x^T (weight-gradient accumulation). G is rows x cols.
void ger_acc(double* g_mat, std::size_t rows, std::size_t cols,
             const double* g, const double* x);

double dot(const double* a, const double* b, std::size_t n);

// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);

// Returns "avx2" or "scalar" depending on which table is live.
const char* active_isa();

// Pin (or release) the scalar reference path. Intended for tests.
void force_scalar(bool on);

// Reference implementations, callable directly for equivalence testing.
namespace scalar {
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* y);
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out);
void ger_acc(double* g_mat, std::size_t rows, std::size_t cols,
             const double* g, const double* x);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define GEOSCHED_HAVE_AVX2_KERNELS 1
namespace avx2 {
bool supported();
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* b, double* y);
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out);
void ger_acc(double* g_mat, std::size_t rows, std::size_t cols,
             const double* g, const double* x);
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace geosched::kern
