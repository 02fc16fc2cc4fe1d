#include "rentcast/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rentcast/config.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/model.hpp"

namespace rentcast::experiments {

PreparedData prepare_data(const ExperimentConfig& config) {
    if (config.data.path.empty()) throw ConfigError("data.path is not set");
    data::SchemaMapping schema;
    if (!config.data.schema.empty()) schema = data::SchemaMapping::load(config.data.schema);
    return prepare_data(data::load_panel(data::PanelPaths::in_directory(config.data.path), schema), config);
}

PreparedData prepare_data(data::Panel panel, const ExperimentConfig& config) {
    PreparedData d;
    if (config.data.select_active_regions) {
        d.selection = data::select_active_regions(panel.mean_listing_counts());
        spdlog::info("active regions: {} of {} above Q3 mean listing count {:.3f}", d.selection->selected.size(),
                     panel.num_regions(), d.selection->threshold);
        if (d.selection->selected.empty()) throw ConfigError("active-region selection kept no regions");
        panel = panel.subset(d.selection->selected);
    }
    std::size_t missing = 0;
    for (auto flag : panel.labels_missing) missing += flag;
    if (missing) spdlog::warn("{} region-months have no labels and are zero-filled", missing);
    d.split = data::assign_splits(panel.months, config.split);
    d.norm = data::compute_label_stats(panel, d.split.train);
    d.panel = std::move(panel);
    return d;
}

InputSource::InputSource(const PreparedData& data, const EmbedSettings& settings)
    : InputSource(data, embed::make_backend(settings), settings.cache_dir, settings.workers) {}

InputSource::InputSource(const PreparedData& data, std::unique_ptr<embed::EmbeddingBackend> backend,
                         std::filesystem::path cache_dir, int workers)
    : data_(data), backend_(std::move(backend)), cache_(std::move(cache_dir)), workers_(std::max(1, workers)) {
    table_.cells = data_.panel.num_regions() * data_.panel.months;
}

const embed::PanelEmbeddings& InputSource::embeddings(const ModalitySet& modalities) {
    ModalitySet missing;
    for (Modality m : modalities.members())
        if (!table_.has(m)) missing.insert(m);
    if (!missing.empty()) {
        auto fresh = embed::embed_panel(data_.panel, missing, *backend_, cache_, workers_);
        for (Modality m : missing.members()) table_.values[int(m)] = std::move(fresh.values[int(m)]);
    }
    return table_;
}

features::CellInputs InputSource::build(const ExperimentConfig& config) {
    if (config.use_llm_embedding) {
        const auto& all = embeddings(config.modalities);
        embed::PanelEmbeddings view;
        view.cells = all.cells;
        for (Modality m : config.modalities.members()) view.values[int(m)] = all.values[int(m)];
        return features::from_embeddings(view, data_.panel, data_.norm);
    }
    const auto encoder = features::RawFeatureEncoder::fit(data_.panel, config.modalities, data_.split.train);
    return features::from_raw_features(encoder, data_.panel, config.modalities, data_.norm);
}

std::array<int, kNumModalities> input_widths(const features::CellInputs& inputs) {
    std::array<int, kNumModalities> w{};
    for (Modality m : kAllModalities) w[int(m)] = inputs.has(m) ? inputs.width(m) : 0;
    return w;
}

RunResult run_experiment(const ExperimentConfig& config, const PreparedData& data, InputSource& source,
                         const std::filesystem::path& run_dir) {
    config.validate();
    const auto windows = features::enumerate_windows(data.panel.months, config.window_size, config.horizon,
                                                     config.stride, data.split);
    if (windows.test.empty()) throw AssemblyError("the test split receives no window samples");
    spdlog::info("{}: {} / {} / {} train / val / test samples", config.variant.empty() ? "run" : config.variant,
                 windows.train.size(), windows.val.size(), windows.test.size());
    const features::CellInputs inputs = source.build(config);
    model::Forecaster forecaster(config, input_widths(inputs));

    RunResult r;
    r.config = config;
    r.dir = run_dir;
    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir);
        save_config(config, run_dir / traineval::RunFiles::kConfig);
    }
    r.training = traineval::train(forecaster, inputs, windows.train, windows.val, data.norm);
    r.val = traineval::evaluate(forecaster, inputs, windows.val, data.norm);
    r.test = traineval::evaluate(forecaster, inputs, windows.test, data.norm);
    if (!run_dir.empty()) {
        traineval::write_loss_log(run_dir / traineval::RunFiles::kLossLog, r.training.log);
        model::save_checkpoint(r.training.best, run_dir / traineval::RunFiles::kCheckpoint);
        const auto raw = traineval::evaluate(forecaster, inputs, windows.test, data.norm, traineval::MetricSpace::Raw);
        traineval::write_metrics(run_dir, {{"test", r.test}, {"val", r.val}, {"test_raw", raw}});
    }
    spdlog::info("{}: test Total RMSE {:.4f} MAE {:.4f}", config.variant.empty() ? "run" : config.variant,
                 r.test.total.rmse, r.test.total.mae);
    return r;
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

int best_row(const std::vector<ResultRow>& rows) {
    int best = -1;
    for (int i = 0; i < int(rows.size()); ++i) {
        if (best < 0) {
            best = i;
            continue;
        }
        const auto& a = rows[i].report.total;
        const auto& b = rows[best].report.total;
        if (a.rmse < b.rmse || (a.rmse == b.rmse && a.mae < b.mae)) best = i;
    }
    return best;
}

namespace {

MetricReport average(const std::vector<MetricReport>& reports) {
    MetricReport out = reports.front();
    const double n = double(reports.size());
    auto avg = [&](auto get) {
        double s = 0.0;
        for (const auto& r : reports) s += get(r);
        return s / n;
    };
    for (int k = 0; k < kNumTargets; ++k) {
        out.per_target[k].rmse = avg([k](const MetricReport& r) { return r.per_target[k].rmse; });
        out.per_target[k].mae = avg([k](const MetricReport& r) { return r.per_target[k].mae; });
    }
    out.total.rmse = avg([](const MetricReport& r) { return r.total.rmse; });
    out.total.mae = avg([](const MetricReport& r) { return r.total.mae; });
    for (std::size_t h = 0; h < out.per_horizon.size(); ++h) {
        for (int k = 0; k < kNumTargets; ++k) {
            out.per_horizon[h][k].rmse = avg([h, k](const MetricReport& r) { return r.per_horizon[h][k].rmse; });
            out.per_horizon[h][k].mae = avg([h, k](const MetricReport& r) { return r.per_horizon[h][k].mae; });
        }
        out.horizon_total[h].rmse = avg([h](const MetricReport& r) { return r.horizon_total[h].rmse; });
        out.horizon_total[h].mae = avg([h](const MetricReport& r) { return r.horizon_total[h].mae; });
    }
    return out;
}

}  // namespace

ResultTable run_grid(const std::string& name, const std::vector<std::pair<ExperimentConfig, std::string>>& cells,
                     const PreparedData& data, InputSource& source, const GridOptions& options,
                     std::vector<RunResult>* runs) {
    if (options.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    ResultTable table;
    table.name = name;
    for (const auto& [config, label] : cells) {
        std::vector<MetricReport> reports;
        for (int rep = 0; rep < options.repetitions; ++rep) {
            ExperimentConfig cfg = config;
            cfg.seed = config.seed + std::uint64_t(rep);
            std::filesystem::path dir;
            if (!options.out_dir.empty()) {
                dir = options.out_dir / cfg.variant;
                if (options.repetitions > 1) dir /= fmt::format("rep-{}", rep);
            }
            RunResult r = run_experiment(cfg, data, source, dir);
            reports.push_back(r.test);
            if (runs) runs->push_back(std::move(r));
        }
        ResultRow row{config.variant, label, average(reports), options.repetitions, 0.0};
        if (reports.size() > 1) {
            double ss = 0.0;
            for (const auto& r : reports) ss += std::pow(r.total.rmse - row.report.total.rmse, 2);
            row.total_rmse_std = std::sqrt(ss / double(reports.size()));
        }
        table.rows.push_back(std::move(row));
    }
    table.best = best_row(table.rows);
    if (!options.out_dir.empty()) write_table_csv(table, options.out_dir / (name + ".csv"));
    return table;
}

ExperimentConfig baseline_config(const ExperimentConfig& base, Architecture architecture) {
    ExperimentConfig c = base;
    c.architecture = architecture;
    c.modalities = ModalitySet{Modality::Airbnb};
    c.use_llm_embedding = false;
    c.dims.airbnb = 128;
    c.dims.label = 4;
    return c;
}

MetricReport run_baseline(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                          Architecture architecture, const std::filesystem::path& run_dir) {
    ExperimentConfig c = baseline_config(base, architecture);
    c.variant = fmt::format("{}-baseline", to_string(architecture));
    return run_experiment(c, data, source, run_dir).test;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = char(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

}  // namespace

std::vector<std::pair<ExperimentConfig, std::string>> model_comparison_cells(const ExperimentConfig& base) {
    std::vector<std::pair<ExperimentConfig, std::string>> cells;
    const std::string display[] = {"RNN", "LSTM", "Transformer"};
    int i = 0;
    for (Architecture a : {Architecture::RNN, Architecture::LSTM, Architecture::Transformer}) {
        ExperimentConfig b = baseline_config(base, a);
        b.variant = lower(to_string(a)) + "-baseline";
        cells.emplace_back(b, display[i] + " Baseline");
        ExperimentConfig o = base;
        o.architecture = a;
        o.variant = lower(to_string(a)) + "-ours";
        cells.emplace_back(o, display[i] + " Our Model");
        ++i;
    }
    return cells;
}

std::vector<std::pair<ExperimentConfig, std::string>> modality_ablation_cells(const ExperimentConfig& base) {
    using M = Modality;
    const std::vector<ModalitySet> subsets = {
        {M::Accessibility},        {M::HumanFlow},      {M::Airbnb},
        {M::Accessibility, M::HumanFlow}, {M::Accessibility, M::Airbnb}, {M::HumanFlow, M::Airbnb},
        ModalitySet::all()};
    std::vector<std::pair<ExperimentConfig, std::string>> cells;
    for (const auto& s : subsets) {
        ExperimentConfig c = base;
        c.architecture = Architecture::LSTM;
        c.use_llm_embedding = true;
        c.modalities = s;
        std::string id = s.str();
        std::replace(id.begin(), id.end(), ',', '+');
        c.variant = "modality-" + id;
        cells.emplace_back(c, s == ModalitySet::all() ? s.label() + " (Our Model)" : s.label());
    }
    return cells;
}

std::vector<std::pair<ExperimentConfig, std::string>> llm_ablation_cells(const ExperimentConfig& base) {
    ExperimentConfig off = base, on = base;
    off.use_llm_embedding = false;
    off.variant = "llm-off";
    on.use_llm_embedding = true;
    on.variant = "llm-on";
    return {{off, "w/o LLM embedding"}, {on, "w/ LLM embedding (Our Model)"}};
}

std::vector<std::pair<ExperimentConfig, std::string>> dimension_sweep_cells(const ExperimentConfig& base) {
    std::vector<std::pair<ExperimentConfig, std::string>> cells;
    int i = 1;
    for (const auto& d : kDimensionOptions) {
        ExperimentConfig c = base;
        c.dims = d;
        c.variant = fmt::format("dims-{}-{}-{}-{}", d.accessibility, d.human_flow, d.airbnb, d.label);
        cells.emplace_back(c, fmt::format("D_opt{} ({} / {} / {} / {})", i++, d.accessibility, d.human_flow,
                                          d.airbnb, d.label));
    }
    return cells;
}

std::vector<std::pair<ExperimentConfig, std::string>> window_sweep_cells(const ExperimentConfig& base) {
    std::vector<std::pair<ExperimentConfig, std::string>> cells;
    for (int w : kWindowOptions) {
        ExperimentConfig c = base;
        c.window_size = w;
        c.variant = fmt::format("window-{}", w);
        cells.emplace_back(c, fmt::format("{} months", w));
    }
    return cells;
}

ResultTable run_model_comparison(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                                 const GridOptions& options, std::vector<RunResult>* runs) {
    return run_grid("model_comparison", model_comparison_cells(base), data, source, options, runs);
}

ResultTable run_modality_ablation(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                                  const GridOptions& options, std::vector<RunResult>* runs) {
    return run_grid("modality_ablation", modality_ablation_cells(base), data, source, options, runs);
}

ResultTable run_llm_ablation(const ExperimentConfig& base, const PreparedData& data, InputSource& source,
                             const GridOptions& options, std::vector<RunResult>* runs) {
    const auto cells = llm_ablation_cells(base);
    if (!(cells[0].first.modalities == cells[1].first.modalities))
        throw ConfigError("LLM ablation arms must share the same modalities");
    return run_grid("llm_ablation", cells, data, source, options, runs);
}

std::pair<ResultTable, ResultTable> run_sweeps(const ExperimentConfig& base, const PreparedData& data,
                                               InputSource& source, const GridOptions& options,
                                               std::vector<RunResult>* runs) {
    ResultTable dims = run_grid("dimension_sweep", dimension_sweep_cells(base), data, source, options, runs);
    ResultTable windows = run_grid("window_sweep", window_sweep_cells(base), data, source, options, runs);
    return {std::move(dims), std::move(windows)};
}

}  // namespace rentcast::experiments
