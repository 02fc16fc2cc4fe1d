#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rentcast/autograd.hpp"
#include "rentcast/core.hpp"
#include "rentcast/data.hpp"
#include "rentcast/random.hpp"

namespace rentcast::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "rentcast");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

std::filesystem::path golden_dir();
/// Compares `actual` with the golden file; with RENTCAST_UPDATE_GOLDEN=1 set
/// the file is rewritten instead. Returns an empty string on match, otherwise
/// a description of the first differing line.
std::string check_golden(const std::string& name, const std::string& actual);

/// Small frozen panel for prompt goldens: 4 regions x 12 months.
data::SyntheticSpec prompt_fixture_spec();

/// The end-to-end fixture: 20 regions x 36 months, seed 7, split (24, 6, 6).
data::SyntheticSpec pipeline_fixture_spec();
ExperimentConfig pipeline_fixture_config();

struct GradCheckResult {
    int checked = 0;
    int resampled = 0;
    double worst = 0.0;  // largest relative error seen
    std::vector<std::string> failures;

    bool ok() const { return failures.empty() && checked > 0; }
};

/// Compares the tape gradient of the scalar built by `loss` against central
/// differences on `samples` random coordinates of `params`. A coordinate whose
/// perturbation flips any ReLU activation is replaced by another draw.
/// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult check_gradients(const std::function<ag::Var(ag::Graph&)>& loss,
                                const std::vector<ag::Parameter*>& params, std::uint64_t seed, int samples = 10,
                                double eps = 1e-6, double tolerance = 1e-3, double floor = 1e-6);

/// Window start months from the definition: every t with [t - window, t + horizon)
/// inside [0, months), t - window reached by stride steps from 0, all targets in
/// one split, sample assigned to that split.
struct BruteWindows {
    std::vector<int> train, val, test;
};
BruteWindows brute_force_windows(int months, int window, int horizon, int stride,
                                 const data::SplitAssignment& split);

}  // namespace rentcast::testing
