#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rentcast/features.hpp"
#include "rentcast/model.hpp"

namespace rentcast::traineval {

using ag::Parameter;
using features::Tensor3;

/// Adaptive moment estimation with bias correction.
class Adam {
public:
    Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void zero_grad();
    void step();
    int steps() const { return t_; }

private:
    std::vector<Parameter*> params_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Row layout for a set of window samples over every region: sequence
/// b = sample * N + region, `rows` indexes into the cell subset `cells`.
struct SequenceBatch {
    int batch = 0;
    std::vector<int> rows;  // [batch * window]
    ag::Matrix targets;     // [batch, horizon * 3]
};

/// Cells (region * months + month) read as model input by the given samples, sorted.
std::vector<int> input_cells(const features::CellInputs& in, std::span<const int> first_targets, int window);
SequenceBatch make_batch(const features::CellInputs& in, std::span<const int> first_targets, int window, int horizon,
                         const std::vector<int>& cells);

struct EpochLog {
    int epoch = 0;
    model::LossBreakdown train;
    model::LossBreakdown val;
    bool improved = false;
};

struct TrainResult {
    model::Checkpoint best;
    std::vector<EpochLog> log;
    int epochs_run = 0;
    bool early_stopped = false;
};

/// Full-batch training on `train_t` with early stopping on the validation
/// total loss; the forecaster holds the best parameters on return. Each epoch
/// scores train and validation losses at the same (pre-update) parameters.
/// Throws TrainingError on a non-finite loss.
TrainResult train(model::Forecaster& forecaster, const features::CellInputs& inputs, const std::vector<int>& train_t,
                  const std::vector<int>& val_t, const data::NormStats& norm,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct SliceMetrics {
    double rmse = 0.0;
    double mae = 0.0;
    bool operator==(const SliceMetrics&) const = default;
};

enum class MetricSpace { NormalizedLog, Raw };
std::string_view to_string(MetricSpace s);

struct MetricReport {
    MetricSpace space = MetricSpace::NormalizedLog;
    int samples = 0;
    std::array<SliceMetrics, kNumTargets> per_target{};
    SliceMetrics total;                                         // mean of the per-target values
    std::vector<std::array<SliceMetrics, kNumTargets>> per_horizon;  // [horizon][target]
    std::vector<SliceMetrics> horizon_total;                   // [horizon]
};

/// Metrics over every (sample, horizon, region) cell of each target slice.
MetricReport compute_metrics(const std::vector<Tensor3>& predictions, const std::vector<Tensor3>& targets,
                             MetricSpace space = MetricSpace::NormalizedLog);

/// Mean over per-target values, the convention behind every "Total" column.
double mean_of_targets(const std::array<double, kNumTargets>& values);

/// Predictions (horizon, N, 3) and targets for each sample, normalized log space.
void predict(model::Forecaster& forecaster, const features::CellInputs& inputs, const std::vector<int>& first_targets,
             std::vector<Tensor3>& predictions, std::vector<Tensor3>& targets);

MetricReport evaluate(model::Forecaster& forecaster, const features::CellInputs& inputs,
                      const std::vector<int>& first_targets, const data::NormStats& norm,
                      MetricSpace space = MetricSpace::NormalizedLog);

// ---------------------------------------------------------------------------
// Run directory
// ---------------------------------------------------------------------------

/// config.ini, loss_log.csv, checkpoint.bin, metrics.json, metrics.csv
struct RunFiles {
    static constexpr const char* kConfig = "config.ini";
    static constexpr const char* kLossLog = "loss_log.csv";
    static constexpr const char* kCheckpoint = "checkpoint.bin";
    static constexpr const char* kMetricsJson = "metrics.json";
    static constexpr const char* kMetricsCsv = "metrics.csv";
};

void write_loss_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);
std::vector<EpochLog> read_loss_log(const std::filesystem::path& path);

/// Named reports (e.g. "test", "val") as JSON and as a long-format CSV table.
void write_metrics(const std::filesystem::path& dir, const std::vector<std::pair<std::string, MetricReport>>& reports);

}  // namespace rentcast::traineval
