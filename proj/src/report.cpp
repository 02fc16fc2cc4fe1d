#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "rentcast/csv.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/experiments.hpp"

namespace rentcast::experiments {

namespace {

std::vector<std::string> table_header() {
    std::vector<std::string> h = {"variant", "label", "total_rmse", "total_mae"};
    for (auto name : kTargetNames) {
        h.push_back(fmt::format("{}_rmse", name));
        h.push_back(fmt::format("{}_mae", name));
    }
    h.insert(h.end(), {"repetitions", "total_rmse_std", "best"});
    return h;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_table_csv(const ResultTable& table, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    csv::write_row(os, table_header());
    for (int i = 0; i < int(table.rows.size()); ++i) {
        const auto& r = table.rows[i];
        std::vector<std::string> row = {r.variant, r.label, num(r.report.total.rmse), num(r.report.total.mae)};
        for (int k = 0; k < kNumTargets; ++k) {
            row.push_back(num(r.report.per_target[k].rmse));
            row.push_back(num(r.report.per_target[k].mae));
        }
        row.insert(row.end(), {std::to_string(r.repetitions), num(r.total_rmse_std), i == table.best ? "1" : "0"});
        csv::write_row(os, row);
    }
    if (!os) throw IngestError("cannot write " + path.string());
}

ResultTable read_table_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    if (t.header != table_header()) throw IngestError(path.string() + ": not a result table");
    ResultTable table;
    table.name = path.stem().string();
    for (const auto& row : t.rows) {
        ResultRow r;
        r.variant = row[0];
        r.label = row[1];
        r.report.total = {std::stod(row[2]), std::stod(row[3])};
        for (int k = 0; k < kNumTargets; ++k) r.report.per_target[k] = {std::stod(row[4 + 2 * k]), std::stod(row[5 + 2 * k])};
        r.repetitions = std::stoi(row[10]);
        r.total_rmse_std = std::stod(row[11]);
        if (row[12] == "1") table.best = int(table.rows.size());
        table.rows.push_back(std::move(r));
    }
    return table;
}

RunSummary summarize(const RunResult& run) {
    RunSummary s;
    s.name = run.config.variant.empty() ? "run" : run.config.variant;
    for (const auto& e : run.training.log) s.val_loss.push_back(e.val.total);
    for (const auto& h : run.test.horizon_total) s.horizon_rmse.push_back(h.rmse);
    return s;
}

RunSummary load_run_summary(const std::filesystem::path& run_dir) {
    RunSummary s;
    s.name = run_dir.filename().string();
    for (const auto& e : traineval::read_loss_log(run_dir / traineval::RunFiles::kLossLog))
        s.val_loss.push_back(e.val.total);
    std::ifstream is(run_dir / traineval::RunFiles::kMetricsJson);
    if (!is) throw IngestError("no metrics.json in " + run_dir.string());
    try {
        const auto doc = nlohmann::json::parse(is);
        for (const auto& h : doc.at("test").at("per_horizon")) s.horizon_rmse.push_back(h.at("total").at("rmse"));
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(fmt::format("{}: malformed metrics.json: {}", run_dir.string(), e.what()));
    }
    return s;
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series) {
    constexpr double W = 720, H = 440, left = 70, right = 200, top = 40, bottom = 50;
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        W, H);
    out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", left + pw / 2,
                       xml_escape(title));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n", left,
                       top, pw, ph);
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(fx),
                           top + ph + 16, fx);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n", left - 6,
                           py(fy) + 4, fy);
        out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>\n",
                           left, py(fy), left + pw);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, H - 12,
                       xml_escape(x_label));
    out += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                       top + ph / 2, xml_escape(y_label));
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % std::size(palette)];
        std::string points;
        for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i)
            if (std::isfinite(series[s].y[i]))
                points += fmt::format("{:.1f},{:.1f} ", px(series[s].x[i]), py(series[s].y[i]));
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color,
                           points);
        const double ly = top + 14 + 16 * double(s);
        out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                           W - right + 12, ly, W - right + 32, color);
        out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - right + 38, ly + 4, xml_escape(series[s].name));
    }
    out += "</svg>\n";
    return out;
}

void emit_report(const std::vector<ResultTable>& tables, const std::vector<RunSummary>& runs,
                 const std::filesystem::path& out_dir) {
    if (tables.empty() && runs.empty()) throw ConfigError("report: no completed runs");
    std::filesystem::create_directories(out_dir);
    for (const auto& t : tables) write_table_csv(t, out_dir / (t.name + ".csv"));

    std::string md = "# Results\n";
    for (const auto& t : tables) {
        md += fmt::format("\n## {}\n\n| Variant | Total RMSE | Total MAE |", t.name);
        for (auto name : kTargetNames) md += fmt::format(" {0} RMSE | {0} MAE |", name);
        md += "\n|---|---|---|";
        for (int k = 0; k < kNumTargets; ++k) md += "---|---|";
        md += '\n';
        for (int i = 0; i < int(t.rows.size()); ++i) {
            const auto& r = t.rows[i];
            const char* mark = i == t.best ? " **(best)**" : "";
            md += fmt::format("| {}{} | {:.4f} | {:.4f} |", r.label, mark, r.report.total.rmse, r.report.total.mae);
            for (int k = 0; k < kNumTargets; ++k)
                md += fmt::format(" {:.4f} | {:.4f} |", r.report.per_target[k].rmse, r.report.per_target[k].mae);
            md += '\n';
        }
        if (!t.rows.empty() && t.rows.front().repetitions > 1) {
            md += "\nTotal RMSE std over repetitions:";
            for (const auto& r : t.rows) md += fmt::format(" {} {:.4f};", r.variant, r.total_rmse_std);
            md += '\n';
        }
    }
    if (!runs.empty()) {
        md += "\n## Runs\n\n| Run | Epochs | Best val L_total | Test RMSE h1 / h2 / h3 |\n|---|---|---|---|\n";
        for (const auto& r : runs) {
            const double best = r.val_loss.empty() ? NAN : *std::min_element(r.val_loss.begin(), r.val_loss.end());
            std::string horizons;
            for (double h : r.horizon_rmse) horizons += fmt::format("{}{:.4f}", horizons.empty() ? "" : " / ", h);
            md += fmt::format("| {} | {} | {:.6f} | {} |\n", r.name, r.val_loss.size(), best, horizons);
        }
    }
    std::ofstream(out_dir / "summary.md", std::ios::binary) << md;

    std::vector<Series> loss, horizon;
    for (const auto& r : runs) {
        Series l{r.name, {}, r.val_loss};
        for (std::size_t i = 0; i < r.val_loss.size(); ++i) l.x.push_back(double(i + 1));
        loss.push_back(std::move(l));
        Series h{r.name, {}, r.horizon_rmse};
        for (std::size_t i = 0; i < r.horizon_rmse.size(); ++i) h.x.push_back(double(i + 1));
        horizon.push_back(std::move(h));
    }
    std::ofstream(out_dir / "loss_curves.svg", std::ios::binary)
        << svg_line_plot("Validation loss", "epoch", "validation L_total", loss);
    std::ofstream(out_dir / "horizon_rmse.svg", std::ios::binary)
        << svg_line_plot("Test RMSE by horizon", "months ahead", "Total RMSE", horizon);
}

}  // namespace rentcast::experiments
