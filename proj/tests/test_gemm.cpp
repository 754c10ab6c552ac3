#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "demnet/rng.hpp"
#include "gemm.hpp"

using demnet::Rng;
using namespace demnet::detail;

namespace {

std::vector<double> random_matrix(int rows, int cols, std::uint64_t seed) {
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  Rng rng(seed);
  for (double& x : v) x = rng.normal();
  return v;
}

// Reference product with plain loops, long doubles to absorb reordering.
std::vector<double> ref_product(int m, int n, int k,
                                const std::vector<double>& a,
                                const std::vector<double>& b, bool a_t,
                                bool b_t) {
  std::vector<double> c(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (int p = 0; p < k; ++p) {
        double av = a_t ? a[static_cast<std::size_t>(p) * m + i]
                        : a[static_cast<std::size_t>(i) * k + p];
        double bv = b_t ? b[static_cast<std::size_t>(j) * k + p]
                        : b[static_cast<std::size_t>(p) * n + j];
        acc += static_cast<long double>(av) * bv;
      }
      c[static_cast<std::size_t>(i) * n + j] = static_cast<double>(acc);
    }
  }
  return c;
}

void expect_close(const std::vector<double>& got,
                  const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  CHECK(worst < tol);
}

}  // namespace

TEST_SUITE("gemm") {

TEST_CASE("all variants match the reference across fringe shapes") {
  // Shapes straddle the microkernel tile (MR/NR), the KC=320 panel, and
  // the MC=120 block boundaries.
  const int ms[] = {1, 3, 7, 17, 120, 121};
  const int ns[] = {1, 5, 16, 33};
  const int ks[] = {1, 9, 64, 320, 321};
  std::uint64_t seed = 100;
  for (int m : ms) {
    for (int n : ns) {
      for (int k : ks) {
        double tol = 1e-12 * k;
        auto a = random_matrix(m, k, seed++);
        auto b = random_matrix(k, n, seed++);
        auto want = ref_product(m, n, k, a, b, false, false);
        std::vector<double> c(static_cast<std::size_t>(m) * n, 0.5);
        gemm_nn(m, n, k, a.data(), k, b.data(), n, c.data(), n, false);
        expect_close(c, want, tol);

        auto at = random_matrix(k, m, seed++);
        want = ref_product(m, n, k, at, b, true, false);
        gemm_tn(m, n, k, at.data(), m, b.data(), n, c.data(), n, false);
        expect_close(c, want, tol);

        auto bt = random_matrix(n, k, seed++);
        want = ref_product(m, n, k, a, bt, false, true);
        gemm_nt(m, n, k, a.data(), k, bt.data(), k, c.data(), n, false);
        expect_close(c, want, tol);
      }
    }
  }
}

TEST_CASE("accumulate adds into the destination") {
  const int m = 13, n = 11, k = 70;
  auto a = random_matrix(m, k, 7);
  auto b = random_matrix(k, n, 8);
  auto want = ref_product(m, n, k, a, b, false, false);
  std::vector<double> c(static_cast<std::size_t>(m) * n, 2.0);
  gemm_nn(m, n, k, a.data(), k, b.data(), n, c.data(), n, true);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i] == doctest::Approx(want[i] + 2.0).epsilon(1e-10));
  }
}

TEST_CASE("non-contiguous leading dimensions") {
  // A 4x6 product embedded in wider buffers.
  const int m = 4, n = 6, k = 5;
  const int lda = 9, ldb = 10, ldc = 8;
  std::vector<double> a(static_cast<std::size_t>(m) * lda, -9.0);
  std::vector<double> b(static_cast<std::size_t>(k) * ldb, -9.0);
  std::vector<double> c(static_cast<std::size_t>(m) * ldc, -9.0);
  Rng rng(21);
  std::vector<double> ad(static_cast<std::size_t>(m) * k);
  std::vector<double> bd(static_cast<std::size_t>(k) * n);
  for (double& x : ad) x = rng.normal();
  for (double& x : bd) x = rng.normal();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      a[static_cast<std::size_t>(i) * lda + p] =
          ad[static_cast<std::size_t>(i) * k + p];
    }
  }
  for (int p = 0; p < k; ++p) {
    for (int j = 0; j < n; ++j) {
      b[static_cast<std::size_t>(p) * ldb + j] =
          bd[static_cast<std::size_t>(p) * n + j];
    }
  }
  gemm_nn(m, n, k, a.data(), lda, b.data(), ldb, c.data(), ldc, false);
  auto want = ref_product(m, n, k, ad, bd, false, false);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      CHECK(c[static_cast<std::size_t>(i) * ldc + j] ==
            doctest::Approx(want[static_cast<std::size_t>(i) * n + j])
                .epsilon(1e-12));
    }
    // The padding beyond column n must stay untouched.
    for (int j = n; j < ldc; ++j) {
      CHECK(c[static_cast<std::size_t>(i) * ldc + j] == -9.0);
    }
  }
}

TEST_CASE("kernel reports a known name") {
  std::string name = gemm_kernel_name();
  CHECK((name == "avx512" || name == "avx2" || name == "scalar"));
}

}  // TEST_SUITE
