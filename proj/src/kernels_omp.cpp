#include <algorithm>
#include <cstddef>
#include <memory>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rentcast/kernels.hpp"

namespace rentcast::kernels {

namespace {

// Packed outer-product GEMM. Operands are addressed through (row, col)
// strides so one core serves all three layouts; packing makes the inner
// kernel contiguous regardless of the source layout.

typedef double v8d __attribute__((vector_size(64), aligned(64)));

constexpr int kMr = 8;
constexpr int kNr = 16;
constexpr int kKc = 256;
constexpr int kNc = 512;
constexpr long kParallelWork = 1L << 16;

struct View {
    const double* data;
    std::size_t rs, cs;
    double at(std::size_t r, std::size_t c) const { return data[r * rs + c * cs]; }
};

// a: kc x kMr interleaved, b: kc x kNr interleaved.
inline void micro(int kc, const double* a, const double* b, double* c, std::size_t ldc, int mr, int nr) {
    v8d acc[kMr][2] = {};
    for (int p = 0; p < kc; ++p) {
        v8d b0, b1;
        __builtin_memcpy(&b0, b + p * kNr, sizeof b0);
        __builtin_memcpy(&b1, b + p * kNr + 8, sizeof b1);
        const double* ap = a + p * kMr;
        for (int r = 0; r < kMr; ++r) {
            acc[r][0] += ap[r] * b0;
            acc[r][1] += ap[r] * b1;
        }
    }
    if (mr == kMr && nr == kNr) {
        for (int r = 0; r < kMr; ++r)
            for (int s = 0; s < 8; ++s) {
                c[r * ldc + s] += acc[r][0][s];
                c[r * ldc + 8 + s] += acc[r][1][s];
            }
        return;
    }
    for (int r = 0; r < mr; ++r)
        for (int s = 0; s < nr; ++s) c[r * ldc + s] += s < 8 ? acc[r][0][s] : acc[r][1][s - 8];
}

// C[M,N] (+)= A[M,K] B[K,N], C row-major with leading dimension N.
void gemm_core(int m, int n, int k, View a, View b, double* c, bool accumulate) {
    if (!accumulate) std::fill(c, c + std::size_t(m) * n, 0.0);
    if (m == 0 || n == 0 || k == 0) return;
    const bool parallel = long(m) * n * k > kParallelWork;
    const int row_panels = (m + kMr - 1) / kMr;
    const int kc_max = std::min(kKc, k);
    const int nc_max = (std::min(kNc, n) + kNr - 1) / kNr * kNr;
    std::unique_ptr<double[]> pa(new double[std::size_t(row_panels) * kMr * kc_max]);
    std::unique_ptr<double[]> pb(new double[std::size_t(nc_max) * kc_max]);
    for (int k0 = 0; k0 < k; k0 += kKc) {
        const int kc = std::min(kKc, k - k0);
#pragma omp parallel for schedule(static) if (parallel)
        for (int ip = 0; ip < row_panels; ++ip) {
            double* dst = pa.get() + std::size_t(ip) * kMr * kc_max;
            for (int p = 0; p < kc; ++p)
                for (int r = 0; r < kMr; ++r) {
                    const int i = ip * kMr + r;
                    dst[p * kMr + r] = i < m ? a.at(std::size_t(i), std::size_t(k0 + p)) : 0.0;
                }
        }
        for (int j0 = 0; j0 < n; j0 += kNc) {
            const int nc = std::min(kNc, n - j0);
            const int col_panels = (nc + kNr - 1) / kNr;
#pragma omp parallel for schedule(static) if (parallel)
            for (int jp = 0; jp < col_panels; ++jp) {
                double* dst = pb.get() + std::size_t(jp) * kNr * kc_max;
                for (int p = 0; p < kc; ++p)
                    for (int s = 0; s < kNr; ++s) {
                        const int j = j0 + jp * kNr + s;
                        dst[p * kNr + s] = j < n ? b.at(std::size_t(k0 + p), std::size_t(j)) : 0.0;
                    }
            }
#pragma omp parallel for schedule(static) if (parallel)
            for (int ip = 0; ip < row_panels; ++ip) {
                const int i0 = ip * kMr;
                const int mr = std::min(kMr, m - i0);
                const double* ap = pa.get() + std::size_t(ip) * kMr * kc_max;
                for (int jp = 0; jp < col_panels; ++jp) {
                    const int jj = j0 + jp * kNr;
                    const int nr = std::min(kNr, n - jj);
                    micro(kc, ap, pb.get() + std::size_t(jp) * kNr * kc_max, c + std::size_t(i0) * n + jj,
                          std::size_t(n), mr, nr);
                }
            }
        }
    }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace omp {

void transpose(int rows, int cols, std::span<const double> in, std::span<double> out) {
    constexpr int kTile = 32;
    const long work = long(rows) * cols;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
    for (int i0 = 0; i0 < rows; i0 += kTile)
        for (int j0 = 0; j0 < cols; j0 += kTile)
            for (int i = i0; i < std::min(rows, i0 + kTile); ++i)
                for (int j = j0; j < std::min(cols, j0 + kTile); ++j)
                    out[std::size_t(j) * rows + i] = in[std::size_t(i) * cols + j];
}

void gemm_nt(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
    gemm_core(m, n, k, {a.data(), std::size_t(k), 1}, {b.data(), 1, std::size_t(k)}, c.data(), accumulate);
}

void gemm_nn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
    gemm_core(m, n, k, {a.data(), std::size_t(k), 1}, {b.data(), std::size_t(n), 1}, c.data(), accumulate);
}

void gemm_tn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
    gemm_core(n, k, m, {a.data(), 1, std::size_t(n)}, {b.data(), std::size_t(k), 1}, c.data(), accumulate);
}

}  // namespace omp

}  // namespace rentcast::kernels
