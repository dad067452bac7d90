#include "xslu/kernels.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

// AVX2 variants. Each lane carries one output element and performs the same
// mul/add/div sequence as the scalar reference, so results are bit-identical.
// No FMA: the reference does a rounded multiply then a rounded add.

namespace xslu::kernels {
namespace {

void v_add(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void v_mul(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void v_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                       _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] = dst[i] + a[i] * b[i];
}

void v_scale(double* dst, double c, const double* x, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(cv, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) dst[i] = c * x[i];
}

void v_axpy(double* dst, double c, const double* x, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(cv, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] = dst[i] + c * x[i];
}

void v_div_scalar(double* dst, const double* x, double s, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_div_pd(_mm256_loadu_pd(x + i), sv));
  }
  for (; i < n; ++i) dst[i] = x[i] / s;
}

void v_relu(double* dst, const double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // max_pd(x, 0) returns the second operand on ties, so -0.0 maps to +0.0
    // exactly like the scalar branch
    _mm256_storeu_pd(dst + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_relu_grad_acc(double* dst, const double* x, const double* g,
                     std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d gz = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), gz));
  }
  for (; i < n; ++i) dst[i] = dst[i] + (x[i] > 0.0 ? g[i] : 0.0);
}

void v_matmul(double* dst, const double* a, const double* b, std::size_t m,
              std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      // four output columns per iteration; the k accumulation order within
      // each lane matches the scalar loop exactly
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(a[i * k + p]);
        const __m256d bv = _mm256_loadu_pd(b + p * n + j);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(av, bv));
      }
      double* out = dst + i * n + j;
      if (accumulate) acc = _mm256_add_pd(_mm256_loadu_pd(out), acc);
      _mm256_storeu_pd(out, acc);
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc = acc + a[i * k + p] * b[p * n + j];
      double* out = &dst[i * n + j];
      *out = accumulate ? *out + acc : acc;
    }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table = {
      "avx2",       v_add,  v_mul,  v_mul_acc,       v_scale,  v_axpy,
      v_div_scalar, v_relu, v_relu_grad_acc, v_matmul,
  };
  return table;
}

}  // namespace xslu::kernels

#endif  // __x86_64__
