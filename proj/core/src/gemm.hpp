#ifndef DEMNET_SRC_GEMM_HPP
#define DEMNET_SRC_GEMM_HPP

// Row-major double GEMM used by the convolution lowering. Not installed;
// layers go through tensor_ops. All variants support accumulate=true
// (C += product) so per-chunk partial products can be summed in place.

namespace demnet::detail {

// C(M x N, ldc) = A(M x K, lda) * B(K x N, ldb)
void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate);

// C(M x N, ldc) = A^T * B, with A stored as (K x M, lda).
void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate);

// C(M x N, ldc) = A * B^T, with B stored as (N x K, ldb).
void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate);

// Kernel description for logs and benchmarks: "avx512", "avx2", "scalar".
const char* gemm_kernel_name();

}  // namespace demnet::detail

#endif  // DEMNET_SRC_GEMM_HPP
