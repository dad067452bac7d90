#pragma once

#include <cstddef>
#include <string>

namespace xslu::kernels {

// Dense double-precision array kernels behind every tensor op. A scalar
// reference implementation and an AVX2 variant are provided; the active one
// is chosen at runtime. Contract: every variant produces bits identical to
// the scalar reference. Per output element the same IEEE operations run in
// the same order, which means
//   - no FMA contraction (built with -ffp-contract=off, plain mul/add),
//   - reductions stay strictly sequential; SIMD lanes only ever carry
//     independent output elements (matmul vectorizes over output columns
//     while the k accumulation stays in order).
// Kernel choice therefore cannot change checkpoints, metrics, or goldens.
struct KernelTable {
  const char* name;

  // dst[i] = a[i] + b[i]
  void (*add)(double* dst, const double* a, const double* b, std::size_t n);
  // dst[i] = a[i] * b[i]
  void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
  // dst[i] += a[i] * b[i]
  void (*mul_acc)(double* dst, const double* a, const double* b, std::size_t n);
  // dst[i] = c * x[i]
  void (*scale)(double* dst, double c, const double* x, std::size_t n);
  // dst[i] += c * x[i]
  void (*axpy)(double* dst, double c, const double* x, std::size_t n);
  // dst[i] = x[i] / s
  void (*div_scalar)(double* dst, const double* x, double s, std::size_t n);
  // dst[i] = x[i] > 0 ? x[i] : 0
  void (*relu)(double* dst, const double* x, std::size_t n);
  // dst[i] += x[i] > 0 ? g[i] : 0   (always adds, +0.0 when masked)
  void (*relu_grad_acc)(double* dst, const double* x, const double* g,
                        std::size_t n);
  // C[m x n] (+)= A[m x k] . B[k x n], row-major
  void (*matmul)(double* dst, const double* a, const double* b, std::size_t m,
                 std::size_t k, std::size_t n, bool accumulate);
};

const KernelTable& scalar_table();
#if defined(__x86_64__)
const KernelTable& avx2_table();  // valid to call only when cpu_has_avx2()
#endif

bool cpu_has_avx2();

// Active table: AVX2 when supported, overridable with select_table() or the
// XSLU_KERNELS environment variable ("scalar" | "avx2" | "auto").
const KernelTable& active_table();
void select_table(const std::string& name);

}  // namespace xslu::kernels
