#pragma once

#include <cstdint>

namespace adk {

// Small dense GEMM kernels used by matmul/conv. Row-major storage throughout.
// Accumulation order is fixed per output element, so results are
// deterministic regardless of how callers schedule work.
//
//   gemm_nn: C[M,N] (+)= A[M,K] * B[K,N]
//   gemm_nt: C[M,N] (+)= A[M,K] * Bt[N,K]^T
//   gemm_tn: C[M,N] (+)= At[K,M]^T * B[K,N]
template <class S>
void gemm_nn(int64_t M, int64_t K, int64_t N, const S* A, const S* B, S* C, bool accum);
template <class S>
void gemm_nt(int64_t M, int64_t K, int64_t N, const S* A, const S* Bt, S* C, bool accum);
template <class S>
void gemm_tn(int64_t M, int64_t K, int64_t N, const S* At, const S* B, S* C, bool accum);

}  // namespace adk
