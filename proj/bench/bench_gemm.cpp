// Serial reference vs OpenMP GEMM kernels at the shapes of the reduction head.

#include <benchmark/benchmark.h>

#include <vector>

#include "rentcast/kernels.hpp"
#include "rentcast/random.hpp"

namespace {

using Kernel = void (*)(int, int, int, std::span<const double>, std::span<const double>, std::span<double>, bool);

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    rentcast::Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
}

// args: m, n, k. Operand sizes follow the kernel's layout.
template <Kernel kernel, int Layout>
void run(benchmark::State& state) {
    const int m = int(state.range(0)), n = int(state.range(1)), k = int(state.range(2));
    std::size_t a_size = std::size_t(m) * k, b_size = std::size_t(n) * k, c_size = std::size_t(m) * n;
    if (Layout == 2) {  // tn: A[m,n], B[m,k], C[n,k]
        a_size = std::size_t(m) * n;
        b_size = std::size_t(m) * k;
        c_size = std::size_t(n) * k;
    }
    const auto a = random_vector(a_size, 1), b = random_vector(b_size, 2);
    std::vector<double> c(c_size);
    for (auto _ : state) {
        kernel(m, n, k, a, b, c, false);
        benchmark::DoNotOptimize(c.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * 2 * std::int64_t(m) * n * k);
}

void shapes(benchmark::internal::Benchmark* b) {
    b->Args({720, 768, 3072})->Args({720, 256, 768})->Args({2160, 512, 128})->Unit(benchmark::kMillisecond);
}

}  // namespace

namespace k = rentcast::kernels;
BENCHMARK(run<k::serial::gemm_nt, 0>)->Name("gemm_nt/serial")->Apply(shapes);
BENCHMARK(run<k::omp::gemm_nt, 0>)->Name("gemm_nt/omp")->Apply(shapes);
BENCHMARK(run<k::serial::gemm_nn, 1>)->Name("gemm_nn/serial")->Apply(shapes);
BENCHMARK(run<k::omp::gemm_nn, 1>)->Name("gemm_nn/omp")->Apply(shapes);
BENCHMARK(run<k::serial::gemm_tn, 2>)->Name("gemm_tn/serial")->Apply(shapes);
BENCHMARK(run<k::omp::gemm_tn, 2>)->Name("gemm_tn/omp")->Apply(shapes);

BENCHMARK_MAIN();
