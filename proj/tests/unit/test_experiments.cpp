#include <doctest.h>

#include <set>

#include <fmt/format.h>

#include "rentcast/config.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/experiments.hpp"
#include "support.hpp"

using namespace rentcast;
using namespace rentcast::experiments;

namespace {

using Cells = std::vector<std::pair<ExperimentConfig, std::string>>;

std::vector<std::string> labels_of(const Cells& cells) {
    std::vector<std::string> out;
    for (const auto& [c, label] : cells) out.push_back(label);
    return out;
}

// Every config key whose value differs between two configs.
std::set<std::string> config_diff(const ExperimentConfig& a, const ExperimentConfig& b) {
    const auto ta = to_ptree(a), tb = to_ptree(b);
    std::set<std::string> out;
    for (const auto& key : config_keys())
        if (ta.get<std::string>(key, "") != tb.get<std::string>(key, "")) out.insert(key);
    return out;
}

ResultRow row(const std::string& variant, double rmse, double mae) {
    ResultRow r;
    r.variant = variant;
    r.label = variant;
    r.report.total = {rmse, mae};
    return r;
}

ExperimentConfig tabular_base() {
    ExperimentConfig c = default_config();
    c.split = {14, 5, 5};
    c.window_size = 3;
    c.use_llm_embedding = false;
    c.data.select_active_regions = false;
    c.model = {16, 1, 2, 32};
    c.train.max_epochs = 8;
    return c;
}

PreparedData tabular_data(const ExperimentConfig& c) {
    data::SyntheticSpec spec;
    spec.regions = 5;
    spec.months = 24;
    spec.seed = 21;
    return prepare_data(data::synthesize(spec).panel, c);
}

}  // namespace

TEST_CASE("modality ablation grid") {
    const ExperimentConfig base = default_config();
    const Cells cells = modality_ablation_cells(base);
    REQUIRE(cells.size() == 7u);
    CHECK(labels_of(cells) == std::vector<std::string>{"Accessibility", "Human Flow", "Airbnb",
                                                       "Accessibility + Human Flow", "Accessibility + Airbnb",
                                                       "Human Flow + Airbnb",
                                                       "Accessibility + Human Flow + Airbnb (Our Model)"});
    std::set<std::string> variants;
    for (const auto& [c, label] : cells) {
        CHECK(c.architecture == Architecture::LSTM);
        CHECK(c.use_llm_embedding);
        CHECK_FALSE(c.modalities.empty());
        variants.insert(c.variant);
        const auto diff = config_diff(base, c);
        for (const auto& key : diff) CHECK_MESSAGE((key == "features.modalities" || key == "variant"), key);
    }
    CHECK(variants.size() == 7u);
}

TEST_CASE("llm ablation arms share modalities") {
    ExperimentConfig base = default_config();
    base.modalities = {Modality::HumanFlow, Modality::Airbnb};
    const Cells cells = llm_ablation_cells(base);
    REQUIRE(cells.size() == 2u);
    CHECK(labels_of(cells) == std::vector<std::string>{"w/o LLM embedding", "w/ LLM embedding (Our Model)"});
    CHECK(cells[0].first.modalities == cells[1].first.modalities);
    CHECK_FALSE(cells[0].first.use_llm_embedding);
    CHECK(cells[1].first.use_llm_embedding);
    CHECK(config_diff(cells[0].first, cells[1].first) == std::set<std::string>{"features.use_llm_embedding", "variant"});
}

TEST_CASE("sweep grids") {
    const ExperimentConfig base = default_config();
    const Cells dims = dimension_sweep_cells(base);
    REQUIRE(dims.size() == 4u);
    const EmbeddingDims expect[] = {{48, 48, 64, 4}, {48, 48, 128, 4}, {48, 64, 128, 4}, {64, 48, 128, 4}};
    for (int i = 0; i < 4; ++i) {
        CHECK(dims[i].first.dims == expect[i]);
        CHECK(config_diff(base, dims[i].first).count("window.size") == 0);
    }
    CHECK(dims[1].second == "D_opt2 (48 / 48 / 128 / 4)");

    const Cells windows = window_sweep_cells(base);
    REQUIRE(windows.size() == 4u);
    for (int i = 0; i < 4; ++i) CHECK(windows[i].first.window_size == 3 * (i + 1));
    CHECK(labels_of(windows) == std::vector<std::string>{"3 months", "6 months", "9 months", "12 months"});
}

TEST_CASE("model comparison grid") {
    const Cells cells = model_comparison_cells(default_config());
    CHECK(labels_of(cells) == std::vector<std::string>{"RNN Baseline", "RNN Our Model", "LSTM Baseline",
                                                       "LSTM Our Model", "Transformer Baseline",
                                                       "Transformer Our Model"});
    for (std::size_t i = 0; i < cells.size(); i += 2) {
        const ExperimentConfig& b = cells[i].first;
        const ExperimentConfig& o = cells[i + 1].first;
        CHECK(b.architecture == o.architecture);
        CHECK_FALSE(b.use_llm_embedding);
        CHECK(b.modalities == ModalitySet{Modality::Airbnb});
        CHECK(b.dims.airbnb == 128);
        CHECK(b.dims.label == 4);
        CHECK(o.use_llm_embedding);
        CHECK(o.modalities == ModalitySet::all());
    }
}

TEST_CASE("best row") {
    CHECK(best_row({}) == -1);
    CHECK(best_row({row("a", 0.5, 0.4), row("b", 0.4, 0.9), row("c", 0.6, 0.1)}) == 1);
    CHECK(best_row({row("a", 0.4, 0.4), row("b", 0.4, 0.3), row("c", 0.4, 0.3)}) == 1);
    CHECK(best_row({row("a", 0.4, 0.3), row("b", 0.4, 0.3)}) == 0);

    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ResultRow> rows;
        const int n = 1 + int(rng.below(8));
        for (int i = 0; i < n; ++i)
            rows.push_back(row(std::to_string(i), 0.1 * double(rng.below(4)), 0.1 * double(rng.below(3))));
        int expect = 0;
        for (int i = 1; i < n; ++i) {
            const auto& a = rows[i].report.total;
            const auto& b = rows[expect].report.total;
            if (std::make_pair(a.rmse, a.mae) < std::make_pair(b.rmse, b.mae)) expect = i;
        }
        REQUIRE(best_row(rows) == expect);
    }
}

TEST_CASE("result table csv round trip") {
    testing::TempDir dir;
    ResultTable t;
    t.name = "modality_ablation";
    for (int i = 0; i < 7; ++i) {
        ResultRow r = row(fmt::format("v{}", i), 0.1 + i / 7.0, 0.05 + i / 11.0);
        r.label = i == 3 ? "A, \"quoted\" label" : fmt::format("row {}", i);
        for (int k = 0; k < 3; ++k) r.report.per_target[k] = {0.2 * k + i / 3.0, 0.1 * k + i / 9.0};
        t.rows.push_back(r);
    }
    t.best = best_row(t.rows);
    write_table_csv(t, dir / "modality_ablation.csv");
    const std::string text = testing::read_file(dir / "modality_ablation.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 8);
    const ResultTable back = read_table_csv(dir / "modality_ablation.csv");
    CHECK(back.name == "modality_ablation");
    REQUIRE(back.rows.size() == 7u);
    CHECK(back.best == t.best);
    for (int i = 0; i < 7; ++i) {
        CHECK(back.rows[i].label == t.rows[i].label);
        CHECK(back.rows[i].report.total == t.rows[i].report.total);
        CHECK(back.rows[i].report.per_target == t.rows[i].report.per_target);
    }
}

TEST_CASE("report needs at least one run") {
    testing::TempDir dir;
    CHECK_THROWS_AS(emit_report({}, {}, dir / "report"), ConfigError);

    ResultTable t;
    t.name = "window_sweep";
    t.rows = {row("window-3", 0.5, 0.4), row("window-6", 0.45, 0.41)};
    t.best = 1;
    RunSummary s{"window-3", {1.0, 0.8, 0.7}, {0.4, 0.5, 0.6}};
    emit_report({t}, {s}, dir / "report");
    for (const char* f : {"window_sweep.csv", "summary.md", "loss_curves.svg", "horizon_rmse.svg"})
        CHECK_MESSAGE(std::filesystem::exists(dir / "report" / f), f);
    const std::string md = testing::read_file(dir / "report/summary.md");
    CHECK(md.find("window-6 **(best)**") != std::string::npos);

    const std::string svg = svg_line_plot("a <b>", "x", "y", {{"s&1", {1, 2}, {3, 4}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("a &lt;b&gt;") != std::string::npos);
    CHECK(svg.find("s&amp;1") != std::string::npos);
}

TEST_CASE("grid runs are replayable and deterministic") {
    const ExperimentConfig base = tabular_base();
    const PreparedData data = tabular_data(base);
    testing::TempDir dir;
    Cells cells = window_sweep_cells(base);
    cells.resize(2);
    for (auto& [c, label] : cells) c.use_llm_embedding = false;

    std::string first_csv;
    for (const char* name : {"a", "b"}) {
        InputSource source(data, std::make_unique<embed::NumericBackend>(), {}, 1);
        std::vector<RunResult> runs;
        const ResultTable t = run_grid("window_sweep", cells, data, source, {dir / name, 1}, &runs);
        REQUIRE(t.rows.size() == 2u);
        REQUIRE(runs.size() == 2u);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const auto run_dir = dir / name / cells[i].first.variant;
            for (const char* f : {"config.ini", "loss_log.csv", "checkpoint.bin", "metrics.json", "metrics.csv"})
                CHECK_MESSAGE(std::filesystem::exists(run_dir / f), f);
            CHECK(load_config(run_dir / "config.ini") == cells[i].first);
            const RunSummary loaded = load_run_summary(run_dir);
            const RunSummary direct = summarize(runs[i]);
            CHECK(loaded.val_loss == direct.val_loss);
            CHECK(loaded.horizon_rmse == direct.horizon_rmse);
        }
        const std::string csv = testing::read_file(dir / name / "window_sweep.csv");
        if (first_csv.empty())
            first_csv = csv;
        else
            CHECK(csv == first_csv);
    }

    // replaying a logged config reproduces its metrics
    const ExperimentConfig replay = load_config(dir / "a" / cells[0].first.variant / "config.ini");
    InputSource source(data, std::make_unique<embed::NumericBackend>(), {}, 1);
    const RunResult again = run_experiment(replay, data, source);
    const ResultTable logged = read_table_csv(dir / "a" / "window_sweep.csv");
    CHECK(again.test.total.rmse == logged.rows[0].report.total.rmse);
}

TEST_CASE("repetitions average over seeds") {
    const ExperimentConfig base = tabular_base();
    const PreparedData data = tabular_data(base);
    testing::TempDir dir;
    InputSource source(data, std::make_unique<embed::NumericBackend>(), {}, 1);
    ExperimentConfig c = base;
    c.variant = "rep";
    std::vector<RunResult> runs;
    const ResultTable t = run_grid("reps", {{c, "rep"}}, data, source, {dir.path(), 2}, &runs);
    REQUIRE(runs.size() == 2u);
    CHECK(runs[1].config.seed == c.seed + 1);
    CHECK(std::filesystem::exists(dir / "rep/rep-1/config.ini"));
    CHECK(t.rows[0].repetitions == 2);
    CHECK(t.rows[0].report.total.rmse == doctest::Approx((runs[0].test.total.rmse + runs[1].test.total.rmse) / 2));
    CHECK(t.rows[0].total_rmse_std == doctest::Approx(std::abs(runs[0].test.total.rmse - runs[1].test.total.rmse) / 2));
    CHECK_THROWS_AS(run_grid("reps", {{c, "rep"}}, data, source, {{}, 0}), ConfigError);
}

TEST_CASE("baseline uses the tabular airbnb path") {
    const ExperimentConfig base = tabular_base();
    const PreparedData data = tabular_data(base);
    InputSource source(data, std::make_unique<embed::NumericBackend>(), {}, 1);
    const ExperimentConfig b = baseline_config(base, Architecture::RNN);
    const features::CellInputs in = source.build(b);
    CHECK(in.has(Modality::Airbnb));
    CHECK_FALSE(in.has(Modality::HumanFlow));
    const auto enc = features::RawFeatureEncoder::fit(data.panel, b.modalities, data.split.train);
    CHECK(in.width(Modality::Airbnb) == enc.dim(Modality::Airbnb));
    const traineval::MetricReport r = run_baseline(base, data, source, Architecture::RNN);
    CHECK(std::isfinite(r.total.rmse));
    CHECK(r.samples > 0);
}
