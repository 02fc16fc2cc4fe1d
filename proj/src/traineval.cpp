#include "rentcast/traineval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "rentcast/csv.hpp"
#include "rentcast/errors.hpp"

namespace rentcast::traineval {

using ag::Graph;
using ag::Matrix;
using ag::Var;

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Parameter* p : params_) {
        m_.emplace_back(p->value.size(), 0.0);
        v_.emplace_back(p->value.size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (!p.grad.same_shape(p.value)) continue;
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad.data[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            p.value.data[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

std::vector<int> input_cells(const features::CellInputs& in, std::span<const int> first_targets, int window) {
    std::vector<char> used(std::size_t(in.cells()), 0);
    for (int t : first_targets)
        for (int r = 0; r < in.regions; ++r)
            for (int m = t - window; m < t; ++m) used[in.cell(r, m)] = 1;
    std::vector<int> cells;
    for (int c = 0; c < in.cells(); ++c)
        if (used[c]) cells.push_back(c);
    return cells;
}

SequenceBatch make_batch(const features::CellInputs& in, std::span<const int> first_targets, int window, int horizon,
                         const std::vector<int>& cells) {
    std::vector<int> position(std::size_t(in.cells()), -1);
    for (std::size_t i = 0; i < cells.size(); ++i) position[cells[i]] = int(i);
    SequenceBatch b;
    b.batch = int(first_targets.size()) * in.regions;
    b.rows.reserve(std::size_t(b.batch) * window);
    b.targets = Matrix(b.batch, horizon * kNumTargets);
    int seq = 0;
    for (int t : first_targets)
        for (int r = 0; r < in.regions; ++r, ++seq) {
            for (int m = t - window; m < t; ++m) {
                const int row = position[in.cell(r, m)];
                if (row < 0) throw AssemblyError(fmt::format("cell for region {} month {} not in subset", r, m));
                b.rows.push_back(row);
            }
            for (int h = 0; h < horizon; ++h)
                for (int k = 0; k < kNumTargets; ++k)
                    b.targets(seq, h * kNumTargets + k) = in.labels(in.cell(r, t + h), k);
        }
    return b;
}

namespace {

struct CellSubset {
    std::vector<int> cells;
    std::array<Matrix, kNumModalities> tables;
    Matrix labels;
};

CellSubset take_cells(const features::CellInputs& in, std::vector<int> cells) {
    CellSubset s;
    s.cells = std::move(cells);
    const int n = int(s.cells.size());
    for (Modality m : kAllModalities) {
        if (!in.has(m)) continue;
        const Matrix& src = in.tables[int(m)];
        Matrix& dst = s.tables[int(m)];
        dst = Matrix(n, src.cols);
        for (int i = 0; i < n; ++i) {
            auto row = src.row(s.cells[i]);
            std::copy(row.begin(), row.end(), dst.row(i).begin());
        }
    }
    s.labels = Matrix(n, kNumTargets);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < kNumTargets; ++k) s.labels(i, k) = in.labels(s.cells[i], k);
    return s;
}

Var encode_subset(Graph& g, model::Forecaster& f, const CellSubset& s) {
    std::array<Var, kNumModalities> inputs;
    for (Modality m : f.config().modalities.members()) {
        if (s.tables[int(m)].rows == 0)
            throw AssemblyError(fmt::format("no {} inputs for an active modality", to_string(m)));
        inputs[int(m)] = g.input_ref(s.tables[int(m)]);
    }
    return f.encode_cells(g, inputs, g.input_ref(s.labels));
}

model::LossBreakdown read_loss(const Graph& g, const model::LossVars& v, const LossWeights& w) {
    model::LossBreakdown b;
    b.reservation_days = g.value(v.parts[0]).data[0];
    b.revenue = g.value(v.parts[1]).data[0];
    b.num_reservations = g.value(v.parts[2]).data[0];
    b.weights = w;
    b.total = g.value(v.total).data[0];
    return b;
}

bool finite(const model::LossBreakdown& b) {
    return std::isfinite(b.total) && std::isfinite(b.reservation_days) && std::isfinite(b.revenue) &&
           std::isfinite(b.num_reservations);
}

}  // namespace

TrainResult train(model::Forecaster& f, const features::CellInputs& inputs, const std::vector<int>& train_t,
                  const std::vector<int>& val_t, const data::NormStats& norm,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    if (train_t.empty() || val_t.empty())
        throw TrainingError(fmt::format("training needs train and validation samples (got {} / {})", train_t.size(),
                                        val_t.size()));
    const ExperimentConfig& cfg = f.config();
    const int w = cfg.window_size;

    std::vector<int> all_t = train_t;
    all_t.insert(all_t.end(), val_t.begin(), val_t.end());
    const CellSubset subset = take_cells(inputs, input_cells(inputs, all_t, w));
    const SequenceBatch tr = make_batch(inputs, train_t, w, cfg.horizon, subset.cells);
    const SequenceBatch va = make_batch(inputs, val_t, w, cfg.horizon, subset.cells);

    f.center_inputs(inputs, input_cells(inputs, train_t, w));
    Adam adam(f.parameters(), cfg.train.learning_rate);
    spdlog::info("training {} ({} parameters) on {} train / {} val samples x {} regions", to_string(cfg.architecture),
                 f.parameter_count(), train_t.size(), val_t.size(), inputs.regions);

    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
        adam.zero_grad();
        Graph g;
        const Var table = encode_subset(g, f, subset);
        const auto tr_loss = model::loss_graph(g, f.forward_rows(g, table, tr.rows, tr.batch),
                                               g.input_ref(tr.targets), cfg.loss_weights, cfg.horizon);
        const auto va_loss = model::loss_graph(g, f.forward_rows(g, table, va.rows, va.batch),
                                               g.input_ref(va.targets), cfg.loss_weights, cfg.horizon);
        EpochLog log{epoch, read_loss(g, tr_loss, cfg.loss_weights), read_loss(g, va_loss, cfg.loss_weights), false};
        if (!finite(log.train) || !finite(log.val))
            throw TrainingError(fmt::format(
                "non-finite loss at epoch {} (full batch): train total {} [{}, {}, {}], val total {} [{}, {}, {}]",
                epoch, log.train.total, log.train.reservation_days, log.train.revenue, log.train.num_reservations,
                log.val.total, log.val.reservation_days, log.val.revenue, log.val.num_reservations));
        if (log.val.total < best) {
            best = log.val.total;
            since_best = 0;
            log.improved = true;
            result.best = model::snapshot(f, norm, epoch, best);
        } else {
            ++since_best;
        }
        result.log.push_back(log);
        result.epochs_run = epoch;
        if (on_epoch) on_epoch(log);
        if (since_best >= cfg.train.patience) {
            result.early_stopped = true;
            break;
        }
        g.backward(tr_loss.total);
        adam.step();
    }
    model::restore(f, result.best);
    spdlog::info("best validation L_total {:.6f} at epoch {} of {}", result.best.val_total, result.best.epoch,
                 result.epochs_run);
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

std::string_view to_string(MetricSpace s) { return s == MetricSpace::Raw ? "raw" : "normalized-log"; }

double mean_of_targets(const std::array<double, kNumTargets>& v) { return (v[0] + v[1] + v[2]) / 3.0; }

namespace {

SliceMetrics finish(double ss, double sa, double n) { return SliceMetrics{std::sqrt(ss / n), sa / n}; }

SliceMetrics mean_slice(const std::array<SliceMetrics, kNumTargets>& s) {
    return SliceMetrics{mean_of_targets({s[0].rmse, s[1].rmse, s[2].rmse}),
                        mean_of_targets({s[0].mae, s[1].mae, s[2].mae})};
}

}  // namespace

MetricReport compute_metrics(const std::vector<Tensor3>& predictions, const std::vector<Tensor3>& targets,
                             MetricSpace space) {
    if (predictions.empty() || predictions.size() != targets.size())
        throw ShapeError(fmt::format("metrics: {} predictions vs {} targets", predictions.size(), targets.size()));
    const int H = predictions.front().d0;
    MetricReport r;
    r.space = space;
    r.samples = int(predictions.size());
    std::vector<std::array<double, kNumTargets>> ss(static_cast<std::size_t>(H)), sa(ss);
    double cells_per_horizon = 0.0;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        const Tensor3& p = predictions[s];
        const Tensor3& y = targets[s];
        if (p.d0 != H || p.d2 != kNumTargets || p.d0 != y.d0 || p.d1 != y.d1 || p.d2 != y.d2)
            throw ShapeError("metrics: inconsistent sample shapes");
        for (int h = 0; h < H; ++h)
            for (int n = 0; n < p.d1; ++n)
                for (int k = 0; k < kNumTargets; ++k) {
                    const double d = p(h, n, k) - y(h, n, k);
                    ss[h][k] += d * d;
                    sa[h][k] += std::abs(d);
                }
        cells_per_horizon += p.d1;
    }
    for (int k = 0; k < kNumTargets; ++k) {
        double tss = 0.0, tsa = 0.0;
        for (int h = 0; h < H; ++h) {
            tss += ss[h][k];
            tsa += sa[h][k];
        }
        r.per_target[k] = finish(tss, tsa, cells_per_horizon * H);
    }
    r.total = mean_slice(r.per_target);
    for (int h = 0; h < H; ++h) {
        std::array<SliceMetrics, kNumTargets> row;
        for (int k = 0; k < kNumTargets; ++k) row[k] = finish(ss[h][k], sa[h][k], cells_per_horizon);
        r.per_horizon.push_back(row);
        r.horizon_total.push_back(mean_slice(row));
    }
    return r;
}

void predict(model::Forecaster& f, const features::CellInputs& inputs, const std::vector<int>& first_targets,
             std::vector<Tensor3>& predictions, std::vector<Tensor3>& targets) {
    const ExperimentConfig& cfg = f.config();
    const CellSubset subset = take_cells(inputs, input_cells(inputs, first_targets, cfg.window_size));
    const SequenceBatch b = make_batch(inputs, first_targets, cfg.window_size, cfg.horizon, subset.cells);
    Graph g(false);
    const Matrix& out = g.value(f.forward_rows(g, encode_subset(g, f, subset), b.rows, b.batch));
    predictions.clear();
    targets.clear();
    const int N = inputs.regions;
    for (std::size_t s = 0; s < first_targets.size(); ++s) {
        Tensor3 p(cfg.horizon, N, kNumTargets), y(cfg.horizon, N, kNumTargets);
        for (int n = 0; n < N; ++n) {
            const int row = int(s) * N + n;
            for (int h = 0; h < cfg.horizon; ++h)
                for (int k = 0; k < kNumTargets; ++k) {
                    p(h, n, k) = out(row, h * kNumTargets + k);
                    y(h, n, k) = b.targets(row, h * kNumTargets + k);
                }
        }
        predictions.push_back(std::move(p));
        targets.push_back(std::move(y));
    }
}

MetricReport evaluate(model::Forecaster& f, const features::CellInputs& inputs, const std::vector<int>& first_targets,
                      const data::NormStats& norm, MetricSpace space) {
    if (first_targets.empty()) throw TrainingError("evaluation needs at least one sample");
    std::vector<Tensor3> pred, target;
    predict(f, inputs, first_targets, pred, target);
    if (space == MetricSpace::Raw)
        for (auto* set : {&pred, &target})
            for (Tensor3& t : *set)
                for (int h = 0; h < t.d0; ++h)
                    for (int n = 0; n < t.d1; ++n) {
                        LabelTriple z;
                        for (int k = 0; k < kNumTargets; ++k) z[k] = t(h, n, k);
                        const LabelTriple raw = data::inverse_transform_labels(z, norm);
                        for (int k = 0; k < kNumTargets; ++k) t(h, n, k) = raw[k];
                    }
    return compute_metrics(pred, target, space);
}

// ---------------------------------------------------------------------------
// Run directory files
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kLossColumns = {
    "epoch",     "train_total", "train_reservation_days", "train_revenue", "train_num_reservations",
    "val_total", "val_reservation_days", "val_revenue",   "val_num_reservations", "improved"};

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void write_loss_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    csv::write_row(os, kLossColumns);
    for (const auto& e : log)
        csv::write_row(os, {std::to_string(e.epoch), num(e.train.total), num(e.train.reservation_days),
                            num(e.train.revenue), num(e.train.num_reservations), num(e.val.total),
                            num(e.val.reservation_days), num(e.val.revenue), num(e.val.num_reservations),
                            e.improved ? "1" : "0"});
    if (!os) throw TrainingError("cannot write " + path.string());
}

std::vector<EpochLog> read_loss_log(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    if (t.header != kLossColumns) throw IngestError(path.string() + ": unexpected loss-log header");
    std::vector<EpochLog> out;
    for (const auto& row : t.rows) {
        EpochLog e;
        e.epoch = std::stoi(row[0]);
        e.train.total = std::stod(row[1]);
        e.train.reservation_days = std::stod(row[2]);
        e.train.revenue = std::stod(row[3]);
        e.train.num_reservations = std::stod(row[4]);
        e.val.total = std::stod(row[5]);
        e.val.reservation_days = std::stod(row[6]);
        e.val.revenue = std::stod(row[7]);
        e.val.num_reservations = std::stod(row[8]);
        e.improved = row[9] == "1";
        out.push_back(e);
    }
    return out;
}

void write_metrics(const std::filesystem::path& dir, const std::vector<std::pair<std::string, MetricReport>>& reports) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    std::ofstream csv_os(dir / RunFiles::kMetricsCsv, std::ios::binary | std::ios::trunc);
    csv::write_row(csv_os, {"split", "space", "horizon", "target", "rmse", "mae"});
    auto row = [&](const std::string& split, const MetricReport& r, const std::string& horizon,
                   std::string_view target, const SliceMetrics& m) {
        csv::write_row(csv_os, {split, std::string(to_string(r.space)), horizon, std::string(target), num(m.rmse),
                                num(m.mae)});
    };
    for (const auto& [split, r] : reports) {
        nlohmann::ordered_json j;
        j["space"] = to_string(r.space);
        j["samples"] = r.samples;
        for (int k = 0; k < kNumTargets; ++k) {
            j["per_target"][std::string(kTargetNames[k])] = {{"rmse", r.per_target[k].rmse},
                                                             {"mae", r.per_target[k].mae}};
            row(split, r, "all", kTargetNames[k], r.per_target[k]);
        }
        j["total"] = {{"rmse", r.total.rmse}, {"mae", r.total.mae}};
        row(split, r, "all", "total", r.total);
        for (std::size_t h = 0; h < r.per_horizon.size(); ++h) {
            nlohmann::ordered_json hj;
            for (int k = 0; k < kNumTargets; ++k) {
                hj[std::string(kTargetNames[k])] = {{"rmse", r.per_horizon[h][k].rmse},
                                                    {"mae", r.per_horizon[h][k].mae}};
                row(split, r, std::to_string(h + 1), kTargetNames[k], r.per_horizon[h][k]);
            }
            hj["total"] = {{"rmse", r.horizon_total[h].rmse}, {"mae", r.horizon_total[h].mae}};
            row(split, r, std::to_string(h + 1), "total", r.horizon_total[h]);
            j["per_horizon"].push_back(hj);
        }
        doc[split] = j;
    }
    std::ofstream json_os(dir / RunFiles::kMetricsJson, std::ios::binary | std::ios::trunc);
    json_os << doc.dump(2) << '\n';
    if (!json_os || !csv_os) throw TrainingError("cannot write metrics in " + dir.string());
}

}  // namespace rentcast::traineval
