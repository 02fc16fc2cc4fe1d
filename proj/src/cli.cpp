#include "rentcast/cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rentcast/config.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/experiments.hpp"
#include "rentcast/model.hpp"
#include "rentcast/promptgen.hpp"

namespace rentcast::cli {

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "INI config file (defaults apply when omitted)");
    cmd->add_option("--set", c.overrides, "Override a config key, e.g. --set model.architecture=TRANSFORMER")
        ->allow_extra_args(false);
    cmd->add_flag("--dry-run", c.dry_run, "Validate config and data, then stop before training");
}

ExperimentConfig resolve(const Common& c, std::ostream& out) {
    ExperimentConfig config = c.config_path.empty() ? default_config() : load_config(c.config_path);
    config = apply_overrides(config, c.overrides);
    out << "# resolved config\n" << to_ini(config) << std::flush;
    return config;
}

std::string keys_footer() {
    std::string s = "Config keys accepted by --config files and --set:\n";
    for (const auto& k : config_keys()) s += "  " + k + "\n";
    s += "Environment: RENTCAST_EMBED_ENDPOINT, RENTCAST_EMBED_MODEL, RENTCAST_EMBED_TOKEN (http backend)\n";
    return s;
}

void print_report(std::ostream& out, const std::string& name, const traineval::MetricReport& r) {
    out << fmt::format("{} ({}, {} samples): Total RMSE {:.4f} MAE {:.4f}\n", name, traineval::to_string(r.space),
                       r.samples, r.total.rmse, r.total.mae);
    for (int k = 0; k < kNumTargets; ++k)
        out << fmt::format("  {:<18} RMSE {:.4f} MAE {:.4f}\n", kTargetNames[k], r.per_target[k].rmse,
                           r.per_target[k].mae);
    for (std::size_t h = 0; h < r.horizon_total.size(); ++h)
        out << fmt::format("  horizon {}          RMSE {:.4f} MAE {:.4f}\n", h + 1, r.horizon_total[h].rmse,
                           r.horizon_total[h].mae);
}

void print_table(std::ostream& out, const experiments::ResultTable& t) {
    out << fmt::format("{}\n", t.name);
    for (int i = 0; i < int(t.rows.size()); ++i)
        out << fmt::format("  {:<48} RMSE {:.4f} MAE {:.4f}{}\n", t.rows[i].label, t.rows[i].report.total.rmse,
                           t.rows[i].report.total.mae, i == t.best ? "  (best)" : "");
}

void describe_data(std::ostream& out, const experiments::PreparedData& d, const ExperimentConfig& config) {
    std::size_t listings = 0;
    for (const auto& cell : d.panel.listings) listings += cell.size();
    out << fmt::format("panel: {} regions x {} months from {}, {} listing rows\n", d.panel.num_regions(),
                       d.panel.months, d.panel.start.str(), listings);
    const auto w =
        features::enumerate_windows(d.panel.months, config.window_size, config.horizon, config.stride, d.split);
    out << fmt::format("windows (size {}): {} train / {} val / {} test\n", config.window_size, w.train.size(),
                       w.val.size(), w.test.size());
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Regional short-term rental forecasting pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.footer(keys_footer());
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with a planted human-flow signal");
    data::SyntheticSpec spec;
    std::string synth_out, synth_start = "2017-01";
    bool synth_truth = false;
    synth->add_option("--regions", spec.regions, "Number of regions")->capture_default_str();
    synth->add_option("--months", spec.months, "Number of months")->capture_default_str();
    synth->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
    synth->add_option("--start", synth_start, "First month (YYYY-MM)")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_flag("--truth", synth_truth, "Also write truth.csv with the planted per-region parameters");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load and validate the four input tables");
    Common ingest_c;
    add_common(ingest, ingest_c);
    std::string ingest_out;
    ingest->add_option("--out", ingest_out, "Write the selected, canonical tables to this directory");

    // prompt
    auto* prompt = app.add_subcommand("prompt", "Render prompts to {kind}/{region}/{YYYY-MM}.txt");
    Common prompt_c;
    add_common(prompt, prompt_c);
    std::string prompt_out;
    prompt->add_option("--out", prompt_out, "Output directory")->required();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Embed every prompt of the active modalities into the cache");
    Common embed_c;
    add_common(embed_cmd, embed_c);

    // train
    auto* train = app.add_subcommand("train", "Train one configuration and evaluate it");
    Common train_c;
    add_common(train, train_c);
    std::string train_out;
    train->add_option("--out", train_out, "Run directory (config, loss log, checkpoint, metrics)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained run directory");
    std::string eval_run, eval_split = "test";
    bool eval_raw = false;
    evaluate->add_option("--run", eval_run, "Run directory holding checkpoint.bin")->required();
    evaluate->add_option("--split", eval_split, "Split to evaluate")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->capture_default_str();
    evaluate->add_flag("--raw", eval_raw, "Report metrics in raw label space instead of normalized log space");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Modality, LLM-embedding or model-comparison grids");
    Common ablate_c;
    add_common(ablate, ablate_c);
    std::string ablate_kind = "modality", ablate_out;
    int ablate_reps = 1;
    ablate->add_option("--kind", ablate_kind, "modality, llm or models")
        ->check(CLI::IsMember({"modality", "llm", "models"}))
        ->capture_default_str();
    ablate->add_option("--out", ablate_out, "Results directory")->required();
    ablate->add_option("--repetitions", ablate_reps, "Seeds per cell (mean reported)")->capture_default_str();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Embedding-dimension and window-size sweeps");
    Common sweep_c;
    add_common(sweep, sweep_c);
    std::string sweep_kind = "all", sweep_out;
    int sweep_reps = 1;
    sweep->add_option("--kind", sweep_kind, "dims, window or all")
        ->check(CLI::IsMember({"dims", "window", "all"}))
        ->capture_default_str();
    sweep->add_option("--out", sweep_out, "Results directory")->required();
    sweep->add_option("--repetitions", sweep_reps, "Seeds per cell (mean reported)")->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "Collect result tables and run directories into a report");
    std::string report_in, report_out;
    report->add_option("--in", report_in, "Results directory written by ablate/sweep/train")->required();
    report->add_option("--out", report_out, "Report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        // subcommand help requests also arrive here
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return kExitOk;
        }
        err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*synth) {
            spec.start = YearMonth::parse(synth_start);
            spec.min_window = std::min(spec.min_window, spec.months);
            data::generate_synthetic(spec, synth_out, synth_truth);
            out << fmt::format("wrote {} regions x {} months to {}\n", spec.regions, spec.months, synth_out);
            return kExitOk;
        }
        if (*ingest) {
            const auto config = resolve(ingest_c, out);
            const auto prepared = experiments::prepare_data(config);
            describe_data(out, prepared, config);
            if (!ingest_out.empty()) {
                data::write_panel(prepared.panel, ingest_out);
                out << "wrote canonical tables to " << ingest_out << "\n";
            }
            return kExitOk;
        }
        if (*prompt) {
            const auto config = resolve(prompt_c, out);
            const auto prepared = experiments::prepare_data(config);
            if (prompt_c.dry_run) return kExitOk;
            const auto n = promptgen::dump_prompts(prepared.panel, prompt_out);
            out << fmt::format("wrote {} prompts to {}\n", n, prompt_out);
            return kExitOk;
        }
        if (*embed_cmd) {
            const auto config = resolve(embed_c, out);
            if (config.embed.cache_dir.empty()) throw ConfigError("embed.cache_dir must be set for the embed stage");
            const auto prepared = experiments::prepare_data(config);
            auto backend = embed::make_backend(config.embed);
            if (embed_c.dry_run) return kExitOk;
            embed::EmbeddingCache cache(config.embed.cache_dir);
            const auto table = embed::embed_panel(prepared.panel, config.modalities, *backend, cache, config.embed.workers);
            out << fmt::format("embedded {} cells x {} modalities with {} into {}\n", table.cells,
                               config.modalities.size(), backend->model_id(), config.embed.cache_dir);
            return kExitOk;
        }
        if (*train) {
            const auto config = resolve(train_c, out);
            const auto prepared = experiments::prepare_data(config);
            describe_data(out, prepared, config);
            if (train_c.dry_run) return kExitOk;
            experiments::InputSource source(prepared, config.embed);
            const auto r = experiments::run_experiment(config, prepared, source, train_out);
            out << fmt::format("best epoch {} of {}, validation L_total {:.6f}\n", r.training.best.epoch,
                               r.training.epochs_run, r.training.best.val_total);
            print_report(out, "val", r.val);
            print_report(out, "test", r.test);
            return kExitOk;
        }
        if (*evaluate) {
            const auto ckpt = model::load_checkpoint(std::filesystem::path(eval_run) / traineval::RunFiles::kCheckpoint);
            const auto prepared = experiments::prepare_data(ckpt.config);
            auto forecaster = model::instantiate(ckpt);
            experiments::InputSource source(prepared, ckpt.config.embed);
            const auto inputs = source.build(ckpt.config);
            const auto w = features::enumerate_windows(prepared.panel.months, ckpt.config.window_size,
                                                       ckpt.config.horizon, ckpt.config.stride, prepared.split);
            const auto& ts = eval_split == "train" ? w.train : eval_split == "val" ? w.val : w.test;
            const auto r = traineval::evaluate(*forecaster, inputs, ts, ckpt.norm,
                                               eval_raw ? traineval::MetricSpace::Raw
                                                        : traineval::MetricSpace::NormalizedLog);
            print_report(out, eval_split, r);
            return kExitOk;
        }
        if (*ablate || *sweep) {
            const Common& c = *ablate ? ablate_c : sweep_c;
            const auto config = resolve(c, out);
            const auto prepared = experiments::prepare_data(config);
            describe_data(out, prepared, config);
            if (c.dry_run) return kExitOk;
            experiments::InputSource source(prepared, config.embed);
            experiments::GridOptions opts{*ablate ? ablate_out : sweep_out, *ablate ? ablate_reps : sweep_reps};
            std::vector<experiments::ResultTable> tables;
            if (*ablate) {
                if (ablate_kind == "modality")
                    tables.push_back(experiments::run_modality_ablation(config, prepared, source, opts));
                else if (ablate_kind == "llm")
                    tables.push_back(experiments::run_llm_ablation(config, prepared, source, opts));
                else
                    tables.push_back(experiments::run_model_comparison(config, prepared, source, opts));
            } else {
                if (sweep_kind != "window")
                    tables.push_back(experiments::run_grid("dimension_sweep",
                                                           experiments::dimension_sweep_cells(config), prepared,
                                                           source, opts));
                if (sweep_kind != "dims")
                    tables.push_back(experiments::run_grid("window_sweep", experiments::window_sweep_cells(config),
                                                           prepared, source, opts));
            }
            for (const auto& t : tables) print_table(out, t);
            return kExitOk;
        }
        if (*report) {
            std::vector<experiments::ResultTable> tables;
            std::vector<experiments::RunSummary> runs;
            std::vector<std::filesystem::path> entries;
            if (!std::filesystem::is_directory(report_in)) throw ConfigError("no results directory " + report_in);
            for (const auto& e : std::filesystem::recursive_directory_iterator(report_in)) entries.push_back(e.path());
            std::sort(entries.begin(), entries.end());
            for (const auto& p : entries) {
                if (p.extension() == ".csv" && p.parent_path() == std::filesystem::path(report_in) &&
                    p.filename() != traineval::RunFiles::kMetricsCsv)
                    tables.push_back(experiments::read_table_csv(p));
                if (std::filesystem::is_directory(p) && std::filesystem::exists(p / traineval::RunFiles::kLossLog) &&
                    std::filesystem::exists(p / traineval::RunFiles::kMetricsJson))
                    runs.push_back(experiments::load_run_summary(p));
            }
            experiments::emit_report(tables, runs, report_out);
            out << fmt::format("report with {} tables and {} runs written to {}\n", tables.size(), runs.size(),
                               report_out);
            return kExitOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace rentcast::cli
