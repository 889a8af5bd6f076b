#include "adk/gemm.hpp"

#include <algorithm>
#include <cstring>

namespace adk {

namespace {

// Tile sizes chosen so four C rows of one n-tile stay in L1.
constexpr int64_t kMB = 4;
constexpr int64_t kNB = 512;

}  // namespace

template <class S>
void gemm_nn(int64_t M, int64_t K, int64_t N, const S* A, const S* B, S* C, bool accum) {
    if (!accum) std::memset(C, 0, size_t(M * N) * sizeof(S));
    for (int64_t m0 = 0; m0 < M; m0 += kMB) {
        int64_t mlim = std::min(m0 + kMB, M);
        for (int64_t n0 = 0; n0 < N; n0 += kNB) {
            int64_t nlim = std::min(n0 + kNB, N);
            int64_t m = m0;
            for (; m + 4 <= mlim; m += 4) {
                S* __restrict c0 = C + (m + 0) * N;
                S* __restrict c1 = C + (m + 1) * N;
                S* __restrict c2 = C + (m + 2) * N;
                S* __restrict c3 = C + (m + 3) * N;
                for (int64_t k = 0; k < K; ++k) {
                    const S a0 = A[(m + 0) * K + k];
                    const S a1 = A[(m + 1) * K + k];
                    const S a2 = A[(m + 2) * K + k];
                    const S a3 = A[(m + 3) * K + k];
                    const S* __restrict b = B + k * N;
                    for (int64_t n = n0; n < nlim; ++n) {
                        const S bv = b[n];
                        c0[n] += a0 * bv;
                        c1[n] += a1 * bv;
                        c2[n] += a2 * bv;
                        c3[n] += a3 * bv;
                    }
                }
            }
            for (; m < mlim; ++m) {
                S* __restrict c = C + m * N;
                for (int64_t k = 0; k < K; ++k) {
                    const S a = A[m * K + k];
                    const S* __restrict b = B + k * N;
                    for (int64_t n = n0; n < nlim; ++n) c[n] += a * b[n];
                }
            }
        }
    }
}

namespace {

// Dot product with lane-wise partial sums; the fixed lane layout keeps the
// accumulation order deterministic while letting the loop vectorize.
template <class S>
S dot_lanes(const S* __restrict a, const S* __restrict b, int64_t K) {
    constexpr int64_t L = 16;
    S acc[L] = {};
    int64_t k = 0;
    for (; k + L <= K; k += L)
        for (int64_t j = 0; j < L; ++j) acc[j] += a[k + j] * b[k + j];
    S tail = 0;
    for (; k < K; ++k) tail += a[k] * b[k];
    S s = tail;
    for (int64_t j = 0; j < L; ++j) s += acc[j];
    return s;
}

}  // namespace

template <class S>
void gemm_nt(int64_t M, int64_t K, int64_t N, const S* A, const S* Bt, S* C, bool accum) {
    for (int64_t m = 0; m < M; ++m) {
        const S* __restrict a = A + m * K;
        S* __restrict c = C + m * N;
        for (int64_t n = 0; n < N; ++n) {
            const S s = dot_lanes(a, Bt + n * K, K);
            if (accum)
                c[n] += s;
            else
                c[n] = s;
        }
    }
}

template <class S>
void gemm_tn(int64_t M, int64_t K, int64_t N, const S* At, const S* B, S* C, bool accum) {
    if (!accum) std::memset(C, 0, size_t(M * N) * sizeof(S));
    for (int64_t m0 = 0; m0 < M; m0 += kMB) {
        int64_t mlim = std::min(m0 + kMB, M);
        for (int64_t n0 = 0; n0 < N; n0 += kNB) {
            int64_t nlim = std::min(n0 + kNB, N);
            int64_t m = m0;
            for (; m + 4 <= mlim; m += 4) {
                S* __restrict c0 = C + (m + 0) * N;
                S* __restrict c1 = C + (m + 1) * N;
                S* __restrict c2 = C + (m + 2) * N;
                S* __restrict c3 = C + (m + 3) * N;
                for (int64_t k = 0; k < K; ++k) {
                    const S* __restrict arow = At + k * M + m;
                    const S a0 = arow[0];
                    const S a1 = arow[1];
                    const S a2 = arow[2];
                    const S a3 = arow[3];
                    const S* __restrict b = B + k * N;
                    for (int64_t n = n0; n < nlim; ++n) {
                        const S bv = b[n];
                        c0[n] += a0 * bv;
                        c1[n] += a1 * bv;
                        c2[n] += a2 * bv;
                        c3[n] += a3 * bv;
                    }
                }
            }
            for (; m < mlim; ++m) {
                S* __restrict c = C + m * N;
                for (int64_t k = 0; k < K; ++k) {
                    const S a = At[k * M + m];
                    const S* __restrict b = B + k * N;
                    for (int64_t n = n0; n < nlim; ++n) c[n] += a * b[n];
                }
            }
        }
    }
}

template void gemm_nn<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
template void gemm_nt<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
template void gemm_tn<float>(int64_t, int64_t, int64_t, const float*, const float*, float*, bool);
template void gemm_nn<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
template void gemm_nt<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);
template void gemm_tn<double>(int64_t, int64_t, int64_t, const double*, const double*, double*, bool);

}  // namespace adk
