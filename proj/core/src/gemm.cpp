#include "gemm.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace demnet::detail {

namespace {

// Register block (microtile) and cache block sizes. KC * NR doubles of B
// stay L1-resident; MC * KC of packed A targets L2.
#if defined(__AVX512F__)
constexpr int MR = 8;
constexpr int NR = 16;
constexpr char kKernelName[] = "avx512";
#elif defined(__AVX2__) && defined(__FMA__)
constexpr int MR = 6;
constexpr int NR = 8;
constexpr char kKernelName[] = "avx2";
#else
constexpr int MR = 4;
constexpr int NR = 4;
constexpr char kKernelName[] = "scalar";
#endif

constexpr int KC = 320;
constexpr int MC = 120;

#if defined(__AVX512F__)

// 8x16 FMA microtile: 16 zmm accumulators + 2 B loads + 1 broadcast.
void micro_kernel(int kc, const double* a, const double* b, double* c, int ldc,
                  bool add) {
  __m512d acc[MR][2];
  for (int i = 0; i < MR; ++i) {
    acc[i][0] = _mm512_setzero_pd();
    acc[i][1] = _mm512_setzero_pd();
  }
  for (int k = 0; k < kc; ++k) {
    __m512d b0 = _mm512_loadu_pd(b + static_cast<std::size_t>(k) * NR);
    __m512d b1 = _mm512_loadu_pd(b + static_cast<std::size_t>(k) * NR + 8);
    const double* ak = a + static_cast<std::size_t>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      __m512d ai = _mm512_set1_pd(ak[i]);
      acc[i][0] = _mm512_fmadd_pd(ai, b0, acc[i][0]);
      acc[i][1] = _mm512_fmadd_pd(ai, b1, acc[i][1]);
    }
  }
  for (int i = 0; i < MR; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * ldc;
    if (add) {
      acc[i][0] = _mm512_add_pd(acc[i][0], _mm512_loadu_pd(ci));
      acc[i][1] = _mm512_add_pd(acc[i][1], _mm512_loadu_pd(ci + 8));
    }
    _mm512_storeu_pd(ci, acc[i][0]);
    _mm512_storeu_pd(ci + 8, acc[i][1]);
  }
}

#elif defined(__AVX2__) && defined(__FMA__)

// 6x8 FMA microtile: 12 ymm accumulators + 2 B loads + 1 broadcast.
void micro_kernel(int kc, const double* a, const double* b, double* c, int ldc,
                  bool add) {
  __m256d acc[MR][2];
  for (int i = 0; i < MR; ++i) {
    acc[i][0] = _mm256_setzero_pd();
    acc[i][1] = _mm256_setzero_pd();
  }
  for (int k = 0; k < kc; ++k) {
    __m256d b0 = _mm256_loadu_pd(b + static_cast<std::size_t>(k) * NR);
    __m256d b1 = _mm256_loadu_pd(b + static_cast<std::size_t>(k) * NR + 4);
    const double* ak = a + static_cast<std::size_t>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      __m256d ai = _mm256_set1_pd(ak[i]);
      acc[i][0] = _mm256_fmadd_pd(ai, b0, acc[i][0]);
      acc[i][1] = _mm256_fmadd_pd(ai, b1, acc[i][1]);
    }
  }
  for (int i = 0; i < MR; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * ldc;
    if (add) {
      acc[i][0] = _mm256_add_pd(acc[i][0], _mm256_loadu_pd(ci));
      acc[i][1] = _mm256_add_pd(acc[i][1], _mm256_loadu_pd(ci + 4));
    }
    _mm256_storeu_pd(ci, acc[i][0]);
    _mm256_storeu_pd(ci + 4, acc[i][1]);
  }
}

#else

void micro_kernel(int kc, const double* a, const double* b, double* c, int ldc,
                  bool add) {
  double acc[MR][NR] = {};
  for (int k = 0; k < kc; ++k) {
    const double* ak = a + static_cast<std::size_t>(k) * MR;
    const double* bk = b + static_cast<std::size_t>(k) * NR;
    for (int i = 0; i < MR; ++i) {
      double ai = ak[i];
      for (int j = 0; j < NR; ++j) acc[i][j] += ai * bk[j];
    }
  }
  for (int i = 0; i < MR; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * ldc;
    if (add) {
      for (int j = 0; j < NR; ++j) ci[j] += acc[i][j];
    } else {
      for (int j = 0; j < NR; ++j) ci[j] = acc[i][j];
    }
  }
}

#endif

// Packs mc x kc of A into MR-row microtiles, k-major inside a tile.
// Short tiles are zero padded so the microkernel never branches.
template <typename AccA>
void pack_a(double* ap, const AccA& a, int mc, int kc) {
  for (int ir = 0; ir < mc; ir += MR) {
    int mr = std::min(MR, mc - ir);
    for (int k = 0; k < kc; ++k) {
      for (int i = 0; i < MR; ++i) {
        *ap++ = i < mr ? a(ir + i, k) : 0.0;
      }
    }
  }
}

// Packs kc x nc of B into NR-column microtiles, k-major inside a tile.
template <typename AccB>
void pack_b(double* bp, const AccB& b, int kc, int nc) {
  for (int jr = 0; jr < nc; jr += NR) {
    int nr = std::min(NR, nc - jr);
    for (int k = 0; k < kc; ++k) {
      for (int j = 0; j < NR; ++j) {
        *bp++ = j < nr ? b(k, jr + j) : 0.0;
      }
    }
  }
}

template <typename AccA, typename AccB>
void gemm_blocked(int m, int n, int k, const AccA& a, const AccB& b, double* c,
                  int ldc, bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    if (!accumulate) {
      for (int i = 0; i < m; ++i) {
        std::fill_n(c + static_cast<std::size_t>(i) * ldc, n, 0.0);
      }
    }
    return;
  }

  int a_tiles = (std::min(m, MC) + MR - 1) / MR;
  int b_tiles = (n + NR - 1) / NR;
  thread_local std::vector<double> a_pack;
  thread_local std::vector<double> b_pack;
  a_pack.resize(static_cast<std::size_t>(a_tiles) * MR * KC);
  b_pack.resize(static_cast<std::size_t>(b_tiles) * NR * KC);

  for (int pc = 0; pc < k; pc += KC) {
    int kc = std::min(KC, k - pc);
    auto b_block = [&](int kk, int j) { return b(pc + kk, j); };
    pack_b(b_pack.data(), b_block, kc, n);
    bool add = accumulate || pc > 0;
    for (int ic = 0; ic < m; ic += MC) {
      int mc = std::min(MC, m - ic);
      auto a_block = [&](int i, int kk) { return a(ic + i, pc + kk); };
      pack_a(a_pack.data(), a_block, mc, kc);
      for (int jr = 0; jr < n; jr += NR) {
        int nr = std::min(NR, n - jr);
        const double* bp =
            b_pack.data() + static_cast<std::size_t>(jr / NR) * NR * kc;
        for (int ir = 0; ir < mc; ir += MR) {
          int mr = std::min(MR, mc - ir);
          const double* ap =
              a_pack.data() + static_cast<std::size_t>(ir / MR) * MR * kc;
          double* ct = c + static_cast<std::size_t>(ic + ir) * ldc + jr;
          if (mr == MR && nr == NR) {
            micro_kernel(kc, ap, bp, ct, ldc, add);
          } else {
            double buf[MR * NR];
            micro_kernel(kc, ap, bp, buf, NR, false);
            for (int i = 0; i < mr; ++i) {
              double* ci = ct + static_cast<std::size_t>(i) * ldc;
              const double* bi = buf + static_cast<std::size_t>(i) * NR;
              if (add) {
                for (int j = 0; j < nr; ++j) ci[j] += bi[j];
              } else {
                for (int j = 0; j < nr; ++j) ci[j] = bi[j];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate) {
  auto acc_a = [=](int i, int kk) {
    return a[static_cast<std::size_t>(i) * lda + kk];
  };
  auto acc_b = [=](int kk, int j) {
    return b[static_cast<std::size_t>(kk) * ldb + j];
  };
  gemm_blocked(m, n, k, acc_a, acc_b, c, ldc, accumulate);
}

void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate) {
  auto acc_a = [=](int i, int kk) {
    return a[static_cast<std::size_t>(kk) * lda + i];
  };
  auto acc_b = [=](int kk, int j) {
    return b[static_cast<std::size_t>(kk) * ldb + j];
  };
  gemm_blocked(m, n, k, acc_a, acc_b, c, ldc, accumulate);
}

void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate) {
  auto acc_a = [=](int i, int kk) {
    return a[static_cast<std::size_t>(i) * lda + kk];
  };
  auto acc_b = [=](int kk, int j) {
    return b[static_cast<std::size_t>(j) * ldb + kk];
  };
  gemm_blocked(m, n, k, acc_a, acc_b, c, ldc, accumulate);
}

const char* gemm_kernel_name() { return kKernelName; }

}  // namespace demnet::detail
