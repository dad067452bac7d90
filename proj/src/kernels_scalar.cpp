#include "xslu/kernels.hpp"

// Reference kernels. These define the canonical operation order; the SIMD
// variants must reproduce them bit for bit.

namespace xslu::kernels {
namespace {

void s_add(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void s_mul(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void s_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = dst[i] + a[i] * b[i];
}

void s_scale(double* dst, double c, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = c * x[i];
}

void s_axpy(double* dst, double c, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = dst[i] + c * x[i];
}

void s_div_scalar(double* dst, const double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] / s;
}

void s_relu(double* dst, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_relu_grad_acc(double* dst, const double* x, const double* g,
                     std::size_t n) {
  // unconditionally adds so that masked lanes contribute +0.0, matching the
  // vector blend exactly (skipping the add would differ on -0.0 slots)
  for (std::size_t i = 0; i < n; ++i) dst[i] = dst[i] + (x[i] > 0.0 ? g[i] : 0.0);
}

void s_matmul(double* dst, const double* a, const double* b, std::size_t m,
              std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc = acc + a[i * k + p] * b[p * n + j];
      double* out = &dst[i * n + j];
      *out = accumulate ? *out + acc : acc;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {
      "scalar",     s_add,  s_mul,  s_mul_acc,       s_scale,  s_axpy,
      s_div_scalar, s_relu, s_relu_grad_acc, s_matmul,
  };
  return table;
}

}  // namespace xslu::kernels
