#include "support.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <unistd.h>

namespace rentcast::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() / fmt::format("{}-{}-{}", tag, ::getpid(), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

fs::path golden_dir() { return RENTCAST_GOLDEN_DIR; }

std::string check_golden(const std::string& name, const std::string& actual) {
    const fs::path path = golden_dir() / name;
    const char* update = std::getenv("RENTCAST_UPDATE_GOLDEN");
    if (update && std::string(update) == "1") {
        write_file(path, actual);
        return {};
    }
    if (!fs::exists(path)) return fmt::format("missing golden file {}", path.string());
    const std::string expected = read_file(path);
    if (expected == actual) return {};
    std::istringstream e(expected), a(actual);
    std::string el, al;
    for (int line = 1;; ++line) {
        const bool he = bool(std::getline(e, el));
        const bool ha = bool(std::getline(a, al));
        if (!he && !ha) return fmt::format("{}: trailing bytes differ", name);
        if (he != ha || el != al)
            return fmt::format("{}:{}: expected '{}' got '{}'", name, line, he ? el : "<eof>", ha ? al : "<eof>");
    }
}

data::SyntheticSpec prompt_fixture_spec() {
    data::SyntheticSpec spec;
    spec.regions = 4;
    spec.months = 12;
    spec.seed = 11;
    return spec;
}

data::SyntheticSpec pipeline_fixture_spec() {
    data::SyntheticSpec spec;
    spec.regions = 20;
    spec.months = 36;
    spec.seed = 7;
    return spec;
}

ExperimentConfig pipeline_fixture_config() {
    ExperimentConfig c = default_config();
    c.split = {24, 6, 6};
    c.embed.backend = "numeric";
    c.data.select_active_regions = false;
    return c;
}

namespace {

double evaluate(const std::function<ag::Var(ag::Graph&)>& loss, std::vector<std::uint8_t>* pattern) {
    ag::Graph g(false);
    g.record_relu_pattern(pattern != nullptr);
    const ag::Var out = loss(g);
    if (pattern) *pattern = g.relu_pattern();
    return g.value(out)(0, 0);
}

}  // namespace

GradCheckResult check_gradients(const std::function<ag::Var(ag::Graph&)>& loss,
                                const std::vector<ag::Parameter*>& params, std::uint64_t seed, int samples,
                                double eps, double tolerance, double floor) {
    GradCheckResult result;
    for (auto* p : params) p->zero_grad();
    std::vector<std::uint8_t> base_pattern;
    {
        ag::Graph g(true);
        g.record_relu_pattern(true);
        const ag::Var out = loss(g);
        base_pattern = g.relu_pattern();
        g.backward(out);
    }
    std::vector<ag::Matrix> analytic;
    for (auto* p : params) analytic.push_back(p->grad);

    Rng rng(seed);
    const int max_draws = samples * 20;
    for (int draw = 0; draw < max_draws && result.checked < samples; ++draw) {
        const std::size_t pi = rng.below(params.size());
        ag::Parameter& p = *params[pi];
        if (p.value.size() == 0) continue;
        const std::size_t idx = rng.below(p.value.size());
        const double orig = p.value.data[idx];

        std::vector<std::uint8_t> plus_pattern, minus_pattern;
        p.value.data[idx] = orig + eps;
        const double plus = evaluate(loss, &plus_pattern);
        p.value.data[idx] = orig - eps;
        const double minus = evaluate(loss, &minus_pattern);
        p.value.data[idx] = orig;
        if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
            ++result.resampled;
            continue;
        }
        const double numeric = (plus - minus) / (2.0 * eps);
        const double a = analytic[pi].data[idx];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        result.worst = std::max(result.worst, rel);
        if (!(rel <= tolerance))
            result.failures.push_back(
                fmt::format("{}[{}]: analytic {:.10g} numeric {:.10g} rel {:.3g}", p.name, idx, a, numeric, rel));
        ++result.checked;
    }
    if (result.checked < samples)
        result.failures.push_back(fmt::format("only {} of {} coordinates avoided ReLU kinks", result.checked, samples));
    return result;
}

BruteWindows brute_force_windows(int months, int window, int horizon, int stride,
                                 const data::SplitAssignment& split) {
    BruteWindows out;
    const data::MonthRange ranges[3] = {split.train, split.val, split.test};
    std::vector<int>* dest[3] = {&out.train, &out.val, &out.test};
    for (int first_input = 0; first_input < months; first_input += stride) {
        const int t = first_input + window;
        if (t + horizon > months) break;
        for (int s = 0; s < 3; ++s) {
            bool inside = true;
            for (int m = t; m < t + horizon; ++m) inside = inside && ranges[s].contains(m);
            if (inside) dest[s]->push_back(t);
        }
    }
    return out;
}

}  // namespace rentcast::testing
