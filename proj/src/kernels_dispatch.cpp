#include "xslu/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace xslu::kernels {
namespace {

const KernelTable* g_active = nullptr;

const KernelTable& pick(const std::string& name) {
  if (name == "scalar") return scalar_table();
#if defined(__x86_64__)
  if (name == "avx2") {
    if (!cpu_has_avx2()) throw std::runtime_error("kernels: CPU lacks AVX2");
    return avx2_table();
  }
#endif
  if (name == "auto") {
#if defined(__x86_64__)
    if (cpu_has_avx2()) return avx2_table();
#endif
    return scalar_table();
  }
  throw std::runtime_error("kernels: unknown table '" + name + "'");
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const KernelTable& active_table() {
  if (g_active == nullptr) {
    const char* env = std::getenv("XSLU_KERNELS");
    g_active = &pick(env != nullptr ? env : "auto");
  }
  return *g_active;
}

void select_table(const std::string& name) { g_active = &pick(name); }

}  // namespace xslu::kernels
