#pragma once

#include <span>

// Dense row-major GEMM kernels behind every linear layer.
//
//   gemm_nt: C[M,N] (+)= A[M,K] * B[N,K]^T     forward of y = x W^T
//   gemm_nn: C[M,N] (+)= A[M,K] * B[K,N]       input gradient dx = dy W
//   gemm_tn: C[N,K] (+)= A[M,N]^T * B[M,K]     weight gradient dW = dy^T x
//
// `serial` is the plain triple-loop reference kept for testing; `omp` is the
// blocked, OpenMP-parallel version used by the model. Each output row of the
// parallel kernels is produced by exactly one thread with a fixed summation
// order, so results do not depend on the thread count.

namespace rentcast::kernels {

namespace serial {
void gemm_nt(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate);
void gemm_nn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate);
void gemm_tn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate);
}  // namespace serial

namespace omp {
void gemm_nt(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate);
void gemm_nn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate);
void gemm_tn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate);
/// out[cols, rows] = in[rows, cols]^T
void transpose(int rows, int cols, std::span<const double> in, std::span<double> out);
}  // namespace omp

using omp::gemm_nn;
using omp::gemm_nt;
using omp::gemm_tn;

/// Threads OpenMP will use for the parallel kernels (1 when built without OpenMP).
int max_threads();

}  // namespace rentcast::kernels
