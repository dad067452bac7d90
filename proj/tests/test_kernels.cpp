#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <vector>

#include "xslu/kernels.hpp"
#include "xslu/rng.hpp"

using namespace xslu;
using kernels::KernelTable;

namespace {

// mixed magnitudes, signs, exact zeros and negative zeros
std::vector<double> rand_values(SplitMix64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t pick = rng.next_below(16);
    if (pick == 0) v[i] = 0.0;
    else if (pick == 1) v[i] = -0.0;
    else if (pick == 2) v[i] = rng.uniform(-1e-12, 1e-12);
    else v[i] = rng.uniform(-3.0, 3.0);
  }
  return v;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// sizes around the 4-lane boundary plus larger odd sizes
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 33, 64, 67};

}  // namespace

TEST_CASE("scalar kernels match naive references bit for bit") {
  const KernelTable& k = kernels::scalar_table();
  SplitMix64 rng(11);
  for (std::size_t n : kSizes) {
    auto a = rand_values(rng, n);
    auto b = rand_values(rng, n);
    std::vector<double> got(n), want(n);

    k.add(got.data(), a.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) want[i] = a[i] + b[i];
    CHECK(bits_equal(got, want));

    k.mul(got.data(), a.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) want[i] = a[i] * b[i];
    CHECK(bits_equal(got, want));

    k.relu(got.data(), a.data(), n);
    for (std::size_t i = 0; i < n; ++i) want[i] = a[i] > 0.0 ? a[i] : 0.0;
    CHECK(bits_equal(got, want));
    for (double v : got) CHECK(!std::signbit(v));
  }
}

TEST_CASE("scalar matmul matches the naive triple loop bit for bit") {
  const KernelTable& k = kernels::scalar_table();
  SplitMix64 rng(12);
  for (std::size_t m : {1, 2, 3, 5}) {
    for (std::size_t kk : {1, 4, 7}) {
      for (std::size_t n : {1, 3, 8, 13}) {
        auto a = rand_values(rng, m * kk);
        auto b = rand_values(rng, kk * n);
        std::vector<double> got(m * n), want(m * n);
        k.matmul(got.data(), a.data(), b.data(), m, kk, n, false);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < kk; ++p) acc = acc + a[i * kk + p] * b[p * n + j];
            want[i * n + j] = acc;
          }
        }
        CHECK(bits_equal(got, want));
      }
    }
  }
}

TEST_CASE("avx2 kernels are bit-identical to the scalar reference") {
  if (!kernels::cpu_has_avx2()) {
    MESSAGE("CPU lacks AVX2; equivalence check skipped");
    return;
  }
#if defined(__x86_64__)
  const KernelTable& s = kernels::scalar_table();
  const KernelTable& v = kernels::avx2_table();
  SplitMix64 rng(13);

  for (std::size_t n : kSizes) {
    auto a = rand_values(rng, n);
    auto b = rand_values(rng, n);
    auto seed_dst = rand_values(rng, n);
    const double c = rng.uniform(-2.0, 2.0);
    const double divisor = rng.uniform(0.5, 2.0);

    std::vector<double> ds(n), dv(n);

    s.add(ds.data(), a.data(), b.data(), n);
    v.add(dv.data(), a.data(), b.data(), n);
    CHECK(bits_equal(ds, dv));

    s.mul(ds.data(), a.data(), b.data(), n);
    v.mul(dv.data(), a.data(), b.data(), n);
    CHECK(bits_equal(ds, dv));

    ds = seed_dst;
    dv = seed_dst;
    s.mul_acc(ds.data(), a.data(), b.data(), n);
    v.mul_acc(dv.data(), a.data(), b.data(), n);
    CHECK(bits_equal(ds, dv));

    s.scale(ds.data(), c, a.data(), n);
    v.scale(dv.data(), c, a.data(), n);
    CHECK(bits_equal(ds, dv));

    ds = seed_dst;
    dv = seed_dst;
    s.axpy(ds.data(), c, a.data(), n);
    v.axpy(dv.data(), c, a.data(), n);
    CHECK(bits_equal(ds, dv));

    s.div_scalar(ds.data(), a.data(), divisor, n);
    v.div_scalar(dv.data(), a.data(), divisor, n);
    CHECK(bits_equal(ds, dv));

    s.relu(ds.data(), a.data(), n);
    v.relu(dv.data(), a.data(), n);
    CHECK(bits_equal(ds, dv));

    ds = seed_dst;
    dv = seed_dst;
    s.relu_grad_acc(ds.data(), a.data(), b.data(), n);
    v.relu_grad_acc(dv.data(), a.data(), b.data(), n);
    CHECK(bits_equal(ds, dv));
  }
#endif
}

TEST_CASE("avx2 matmul is bit-identical to the scalar reference") {
  if (!kernels::cpu_has_avx2()) {
    MESSAGE("CPU lacks AVX2; equivalence check skipped");
    return;
  }
#if defined(__x86_64__)
  const KernelTable& s = kernels::scalar_table();
  const KernelTable& v = kernels::avx2_table();
  SplitMix64 rng(14);
  for (std::size_t m : {1, 2, 5, 8}) {
    for (std::size_t kk : {1, 3, 16}) {
      for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 12, 13, 64}) {
        auto a = rand_values(rng, m * kk);
        auto b = rand_values(rng, kk * n);
        auto seed_dst = rand_values(rng, m * n);
        for (bool acc : {false, true}) {
          std::vector<double> ds = seed_dst, dv = seed_dst;
          s.matmul(ds.data(), a.data(), b.data(), m, kk, n, acc);
          v.matmul(dv.data(), a.data(), b.data(), m, kk, n, acc);
          CHECK(bits_equal(ds, dv));
        }
      }
    }
  }
#endif
}

TEST_CASE("kernel table selection") {
  kernels::select_table("scalar");
  CHECK(std::string(kernels::active_table().name) == "scalar");
  CHECK_THROWS(kernels::select_table("mmx"));
  if (kernels::cpu_has_avx2()) {
    kernels::select_table("avx2");
    CHECK(std::string(kernels::active_table().name) == "avx2");
  }
  kernels::select_table("auto");
}
