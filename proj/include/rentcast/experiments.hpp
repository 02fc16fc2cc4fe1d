#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rentcast/core.hpp"
#include "rentcast/data.hpp"
#include "rentcast/embed.hpp"
#include "rentcast/features.hpp"
#include "rentcast/traineval.hpp"

namespace rentcast::experiments {

using traineval::MetricReport;

/// Panel after active-region selection, with its split and label statistics.
struct PreparedData {
    data::Panel panel;
    data::SplitAssignment split;
    data::NormStats norm;
    std::optional<data::ActiveRegionSelection> selection;
};

/// Loads config.data.path (optionally through config.data.schema), applies
/// the Q3 active-region filter when enabled, assigns splits and fits label stats.
PreparedData prepare_data(const ExperimentConfig& config);
PreparedData prepare_data(data::Panel panel, const ExperimentConfig& config);

/// Builds per-cell model inputs for a config: LLM embeddings (computed once
/// per modality and reused across runs) or the tabular features.
class InputSource {
public:
    InputSource(const PreparedData& data, const EmbedSettings& settings);
    InputSource(const PreparedData& data, std::unique_ptr<embed::EmbeddingBackend> backend,
                std::filesystem::path cache_dir, int workers);

    features::CellInputs build(const ExperimentConfig& config);
    const embed::PanelEmbeddings& embeddings(const ModalitySet& modalities);

private:
    const PreparedData& data_;
    std::unique_ptr<embed::EmbeddingBackend> backend_;
    embed::EmbeddingCache cache_;
    int workers_;
    embed::PanelEmbeddings table_;
};

std::array<int, kNumModalities> input_widths(const features::CellInputs& inputs);

struct RunResult {
    ExperimentConfig config;
    traineval::TrainResult training;
    MetricReport val;
    MetricReport test;
    std::filesystem::path dir;  // empty when not persisted
};

/// Trains and evaluates one configuration. With a non-empty `run_dir`, writes
/// config.ini, loss_log.csv, checkpoint.bin, metrics.json and metrics.csv there.
RunResult run_experiment(const ExperimentConfig& config, const PreparedData& data, InputSource& source,
                         const std::filesystem::path& run_dir = {});

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

struct ResultRow {
    std::string variant;  // stable id, also the run directory name
    std::string label;    // display label
    MetricReport report;  // mean over repetitions
    int repetitions = 1;
    double total_rmse_std = 0.0;
};

struct ResultTable {
    std::string name;
    std::vector<ResultRow> rows;
    int best = -1;
};

/// Argmin of Total RMSE; ties broken by Total MAE, then row order. -1 when empty.
int best_row(const std::vector<ResultRow>& rows);

void write_table_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_table_csv(const std::filesystem::path& path);

struct GridOptions {
    std::filesystem::path out_dir;  // empty: nothing persisted
    int repetitions = 1;            // seeds seed, seed + 1, ...
};

/// Runs every config (one grid cell per config) and collects a table.
ResultTable run_grid(const std::string& name, const std::vector<std::pair<ExperimentConfig, std::string>>& cells,
                     const PreparedData& data, InputSource& source, const GridOptions& options,
                     std::vector<RunResult>* runs = nullptr);

/// Tabular baseline: Airbnb listing features only, one affine projection to 128 dims, label history to 4.
ExperimentConfig baseline_config(const ExperimentConfig& base, Architecture architecture);

MetricReport run_baseline(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                          Architecture architecture, const std::filesystem::path& run_dir = {});

/// Baseline vs proposed model for each architecture (6 rows).
std::vector<std::pair<ExperimentConfig, std::string>> model_comparison_cells(const ExperimentConfig& base);
/// The 7 non-empty modality subsets, LSTM, label history always included.
std::vector<std::pair<ExperimentConfig, std::string>> modality_ablation_cells(const ExperimentConfig& base);
/// Tabular arm then LLM-embedding arm over identical modalities.
std::vector<std::pair<ExperimentConfig, std::string>> llm_ablation_cells(const ExperimentConfig& base);
std::vector<std::pair<ExperimentConfig, std::string>> dimension_sweep_cells(const ExperimentConfig& base);
std::vector<std::pair<ExperimentConfig, std::string>> window_sweep_cells(const ExperimentConfig& base);

inline constexpr std::array<EmbeddingDims, 4> kDimensionOptions = {
    EmbeddingDims{48, 48, 64, 4}, EmbeddingDims{48, 48, 128, 4}, EmbeddingDims{48, 64, 128, 4},
    EmbeddingDims{64, 48, 128, 4}};
inline constexpr std::array<int, 4> kWindowOptions = {3, 6, 9, 12};

ResultTable run_model_comparison(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                                 const GridOptions& options, std::vector<RunResult>* runs = nullptr);
ResultTable run_modality_ablation(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                                  const GridOptions& options, std::vector<RunResult>* runs = nullptr);
ResultTable run_llm_ablation(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                             const GridOptions& options, std::vector<RunResult>* runs = nullptr);
/// {dimension table, window table}
std::pair<ResultTable, ResultTable> run_sweeps(const ExperimentConfig& base, const PreparedData& data,
                                               InputSource& source, const GridOptions& options,
                                               std::vector<RunResult>* runs = nullptr);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Run summary used for plots: validation loss curve and per-horizon test RMSE.
struct RunSummary {
    std::string name;
    std::vector<double> val_loss;
    std::vector<double> horizon_rmse;
};

RunSummary summarize(const RunResult& run);
/// Reads loss_log.csv and metrics.json from a run directory.
RunSummary load_run_summary(const std::filesystem::path& run_dir);

struct Series {
    std::string name;
    std::vector<double> x, y;
};
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

/// Writes {table}.csv, summary.md, loss_curves.svg and horizon_rmse.svg into `out_dir`.
/// Throws ConfigError when there is nothing to report.
void emit_report(const std::vector<ResultTable>& tables, const std::vector<RunSummary>& runs,
                 const std::filesystem::path& out_dir);

}  // namespace rentcast::experiments
