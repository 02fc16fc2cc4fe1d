#include <doctest.h>

#include <cmath>
#include <vector>

#include <fmt/format.h>
#include <omp.h>

#include "rentcast/kernels.hpp"
#include "rentcast/random.hpp"

using namespace rentcast;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

using Gemm = void (*)(int, int, int, std::span<const double>, std::span<const double>, std::span<double>, bool);

struct Case {
    const char* name;
    Gemm serial, parallel;
    // element counts of a, b, c for (m, n, k)
    std::size_t (*a_size)(int, int, int);
    std::size_t (*b_size)(int, int, int);
    std::size_t (*c_size)(int, int, int);
};

const Case kCases[] = {
    {"nt", kernels::serial::gemm_nt, kernels::omp::gemm_nt, [](int m, int, int k) { return std::size_t(m) * k; },
     [](int, int n, int k) { return std::size_t(n) * k; }, [](int m, int n, int) { return std::size_t(m) * n; }},
    {"nn", kernels::serial::gemm_nn, kernels::omp::gemm_nn, [](int m, int, int k) { return std::size_t(m) * k; },
     [](int, int n, int k) { return std::size_t(k) * n; }, [](int m, int n, int) { return std::size_t(m) * n; }},
    {"tn", kernels::serial::gemm_tn, kernels::omp::gemm_tn, [](int m, int n, int) { return std::size_t(m) * n; },
     [](int m, int, int k) { return std::size_t(m) * k; }, [](int, int n, int k) { return std::size_t(n) * k; }},
};

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    return worst;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference") {
    Rng rng(3);
    const int sizes[] = {1, 2, 7, 8, 9, 15, 16, 17, 31, 100, 257, 530};
    for (const Case& c : kCases)
        for (int trial = 0; trial < 40; ++trial) {
            const int m = sizes[rng.below(std::size(sizes))];
            const int n = sizes[rng.below(std::size(sizes))];
            const int k = sizes[rng.below(std::size(sizes))];
            const auto a = random_vector(c.a_size(m, n, k), rng);
            const auto b = random_vector(c.b_size(m, n, k), rng);
            const auto init = random_vector(c.c_size(m, n, k), rng);
            for (bool accumulate : {false, true}) {
                std::vector<double> expect = init, got = init;
                c.serial(m, n, k, a, b, expect, accumulate);
                c.parallel(m, n, k, a, b, got, accumulate);
                INFO(fmt::format("{} m={} n={} k={} accumulate={}", c.name, m, n, k, accumulate));
                REQUIRE(max_rel_diff(got, expect) < 1e-12 * std::max(1, k));
            }
        }
}

TEST_CASE("kernel shapes used by the reduction heads") {
    Rng rng(4);
    const int m = 96, n = 768, k = 3072;
    const auto x = random_vector(std::size_t(m) * k, rng);
    const auto w = random_vector(std::size_t(n) * k, rng);
    std::vector<double> expect(std::size_t(m) * n), got(std::size_t(m) * n);
    kernels::serial::gemm_nt(m, n, k, x, w, expect, false);
    kernels::omp::gemm_nt(m, n, k, x, w, got, false);
    CHECK(max_rel_diff(got, expect) < 1e-10);
}

TEST_CASE("parallel kernels do not depend on the thread count") {
    Rng rng(5);
    const int m = 300, n = 200, k = 700;
    const auto a = random_vector(std::size_t(m) * k, rng);
    const auto b = random_vector(std::size_t(n) * k, rng);
    const int saved = omp_get_max_threads();
    std::vector<double> reference;
    for (int threads : {1, 2, 3, 8}) {
        omp_set_num_threads(threads);
        std::vector<double> c(std::size_t(m) * n);
        kernels::omp::gemm_nt(m, n, k, a, b, c, false);
        if (reference.empty())
            reference = c;
        else
            CHECK(c == reference);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("transpose") {
    Rng rng(6);
    for (auto [rows, cols] : {std::pair{1, 1}, std::pair{3, 70}, std::pair{65, 33}, std::pair{400, 300}}) {
        const auto in = random_vector(std::size_t(rows) * cols, rng);
        std::vector<double> out(in.size());
        kernels::omp::transpose(rows, cols, in, out);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                REQUIRE(out[std::size_t(j) * rows + i] == in[std::size_t(i) * cols + j]);
    }
    CHECK(kernels::max_threads() >= 1);
}
