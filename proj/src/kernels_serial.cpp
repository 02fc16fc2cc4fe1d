#include "rentcast/kernels.hpp"

#include <cstddef>

namespace rentcast::kernels::serial {

void gemm_nt(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[std::size_t(i) * k + p] * b[std::size_t(j) * k + p];
            double& out = c[std::size_t(i) * n + j];
            out = accumulate ? out + s : s;
        }
}

void gemm_nn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[std::size_t(i) * k + p] * b[std::size_t(p) * n + j];
            double& out = c[std::size_t(i) * n + j];
            out = accumulate ? out + s : s;
        }
}

void gemm_tn(int m, int n, int k, std::span<const double> a, std::span<const double> b, std::span<double> c,
             bool accumulate) {
    for (int j = 0; j < n; ++j)
        for (int q = 0; q < k; ++q) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += a[std::size_t(i) * n + j] * b[std::size_t(i) * k + q];
            double& out = c[std::size_t(j) * k + q];
            out = accumulate ? out + s : s;
        }
}

}  // namespace rentcast::kernels::serial
