#include "rentcast/model.hpp"

#include <fmt/format.h>

#include "rentcast/errors.hpp"

namespace rentcast::model {

namespace {

std::vector<int> rows_at(const std::vector<int>& rows, int batch, int window, int tau) {
    std::vector<int> out(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) out[b] = rows[std::size_t(b) * window + tau];
    return out;
}

void check_rows(const std::vector<int>& rows, int batch, int window) {
    if (batch < 1 || window < 1 || rows.size() != std::size_t(batch) * window)
        throw ShapeError(fmt::format("sequence layout: {} rows for batch {} x window {}", rows.size(), batch, window));
}

}  // namespace

// ---------------------------------------------------------------------------
// RNN
// ---------------------------------------------------------------------------

RnnEncoder::RnnEncoder(int input, int hidden, int layers, Rng& rng) : hidden_(hidden) {
    for (int l = 0; l < layers; ++l) {
        input_.emplace_back(fmt::format("rnn.l{}.input", l), l == 0 ? input : hidden, hidden, rng);
        recurrent_.emplace_back(fmt::format("rnn.l{}.recurrent", l), hidden, hidden, rng);
    }
}

Var RnnEncoder::encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) {
    check_rows(rows, batch, window);
    std::vector<Var> seq;
    for (int tau = 0; tau < window; ++tau) seq.push_back(ag::gather_rows(g, table, rows_at(rows, batch, window, tau)));
    for (std::size_t l = 0; l < input_.size(); ++l) {
        Var h = g.input(Matrix(batch, hidden_));
        for (int tau = 0; tau < window; ++tau) {
            h = ag::tanh(g, ag::add(g, input_[l](g, seq[tau]), recurrent_[l](g, h)));
            seq[tau] = h;
        }
    }
    return seq.back();
}

void RnnEncoder::collect(std::vector<Parameter*>& out) {
    for (std::size_t l = 0; l < input_.size(); ++l) {
        input_[l].collect(out);
        recurrent_[l].collect(out);
    }
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LstmEncoder::LstmEncoder(int input, int hidden, int layers, Rng& rng) : hidden_(hidden) {
    for (int l = 0; l < layers; ++l) {
        input_.emplace_back(fmt::format("lstm.l{}.input", l), l == 0 ? input : hidden, 4 * hidden, rng);
        recurrent_.emplace_back(fmt::format("lstm.l{}.recurrent", l), hidden, 4 * hidden, rng);
    }
}

Var LstmEncoder::encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) {
    check_rows(rows, batch, window);
    const int H = hidden_;
    std::vector<Var> seq;
    for (int tau = 0; tau < window; ++tau) seq.push_back(ag::gather_rows(g, table, rows_at(rows, batch, window, tau)));
    for (std::size_t l = 0; l < input_.size(); ++l) {
        Var h = g.input(Matrix(batch, H));
        Var c = g.input(Matrix(batch, H));
        for (int tau = 0; tau < window; ++tau) {
            Var gates = ag::add(g, input_[l](g, seq[tau]), recurrent_[l](g, h));
            Var i = ag::sigmoid(g, ag::slice_cols(g, gates, 0, H));
            Var f = ag::sigmoid(g, ag::slice_cols(g, gates, H, H));
            Var cand = ag::tanh(g, ag::slice_cols(g, gates, 2 * H, H));
            Var o = ag::sigmoid(g, ag::slice_cols(g, gates, 3 * H, H));
            c = ag::add(g, ag::mul(g, f, c), ag::mul(g, i, cand));
            h = ag::mul(g, o, ag::tanh(g, c));
            seq[tau] = h;
        }
    }
    return seq.back();
}

void LstmEncoder::collect(std::vector<Parameter*>& out) {
    for (std::size_t l = 0; l < input_.size(); ++l) {
        input_[l].collect(out);
        recurrent_[l].collect(out);
    }
}

// ---------------------------------------------------------------------------
// Transformer
// ---------------------------------------------------------------------------

TransformerEncoder::TransformerEncoder(int input, int window, const ModelSettings& s, Rng& rng)
    : heads_(s.heads), project_("transformer.input", input, s.hidden, rng),
      position_("transformer.position", window, s.hidden) {
    if (s.hidden % s.heads != 0)
        throw ConfigError(fmt::format("model.hidden {} is not divisible by model.heads {}", s.hidden, s.heads));
    nn::init_uniform_fan_in(position_, s.hidden, rng);
    for (int l = 0; l < s.layers; ++l) {
        const std::string p = fmt::format("transformer.l{}", l);
        layers_.push_back(Layer{nn::Linear(p + ".query", s.hidden, s.hidden, rng),
                                nn::Linear(p + ".key", s.hidden, s.hidden, rng),
                                nn::Linear(p + ".value", s.hidden, s.hidden, rng),
                                nn::Linear(p + ".attn_out", s.hidden, s.hidden, rng),
                                nn::Linear(p + ".ffn1", s.hidden, s.ffn, rng),
                                nn::Linear(p + ".ffn2", s.ffn, s.hidden, rng),
                                nn::LayerNorm(p + ".norm1", s.hidden), nn::LayerNorm(p + ".norm2", s.hidden)});
    }
}

Var TransformerEncoder::encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) {
    check_rows(rows, batch, window);
    if (window != position_.value.rows)
        throw ShapeError(fmt::format("transformer built for window {}, got {}", position_.value.rows, window));
    Var x = project_(g, ag::gather_rows(g, table, rows));
    x = ag::add_positional(g, x, g.param(position_), window);
    for (auto& L : layers_) {
        Var attn = ag::self_attention(g, L.q(g, x), L.k(g, x), L.v(g, x), batch, window, heads_);
        x = L.norm1(g, ag::add(g, x, L.out(g, attn)));
        Var ff = L.ff2(g, ag::relu(g, L.ff1(g, x)));
        x = L.norm2(g, ag::add(g, x, ff));
    }
    std::vector<int> last(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) last[b] = b * window + window - 1;
    return ag::gather_rows(g, x, std::move(last));
}

void TransformerEncoder::collect(std::vector<Parameter*>& out) {
    project_.collect(out);
    out.push_back(&position_);
    for (auto& L : layers_) {
        for (nn::Linear* lin : {&L.q, &L.k, &L.v, &L.out, &L.ff1, &L.ff2}) lin->collect(out);
        L.norm1.collect(out);
        L.norm2.collect(out);
    }
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

LossVars loss_graph(Graph& g, Var predictions, Var targets, const LossWeights& weights, int horizon) {
    const Matrix& p = g.value(predictions);
    if (p.cols != horizon * kNumTargets || !p.same_shape(g.value(targets)))
        throw ShapeError(fmt::format("loss: predictions {}x{} vs targets {}x{} (horizon {})", p.rows, p.cols,
                                     g.value(targets).rows, g.value(targets).cols, horizon));
    LossVars out;
    for (int k = 0; k < kNumTargets; ++k) {
        std::vector<int> cols;
        for (int h = 0; h < horizon; ++h) cols.push_back(h * kNumTargets + k);
        out.parts[k] = ag::column_group_mse(g, predictions, targets, cols);
    }
    const std::array<double, kNumTargets> w = {weights.alpha, weights.beta, weights.gamma};
    out.total = ag::weighted_sum(g, out.parts, w);
    return out;
}

LossBreakdown compute_loss(const Tensor3& predictions, const Tensor3& targets, const LossWeights& weights) {
    if (predictions.d0 != targets.d0 || predictions.d1 != targets.d1 || predictions.d2 != kNumTargets ||
        targets.d2 != kNumTargets)
        throw ShapeError(fmt::format("loss: predictions ({},{},{}) vs targets ({},{},{})", predictions.d0,
                                     predictions.d1, predictions.d2, targets.d0, targets.d1, targets.d2));
    std::array<double, kNumTargets> mse{};
    const double cells = double(predictions.d0) * predictions.d1;
    for (int k = 0; k < kNumTargets; ++k) {
        double ss = 0.0;
        for (int h = 0; h < predictions.d0; ++h)
            for (int n = 0; n < predictions.d1; ++n) {
                const double d = predictions(h, n, k) - targets(h, n, k);
                ss += d * d;
            }
        mse[k] = ss / cells;
    }
    LossBreakdown out;
    out.reservation_days = mse[0];
    out.revenue = mse[1];
    out.num_reservations = mse[2];
    out.weights = weights;
    out.total = weights.alpha * mse[0] + weights.beta * mse[1] + weights.gamma * mse[2];
    return out;
}

// ---------------------------------------------------------------------------
// Forecaster
// ---------------------------------------------------------------------------

Forecaster::Forecaster(const ExperimentConfig& config, std::array<int, kNumModalities> input_widths)
    : config_(config), input_widths_(input_widths) {
    config_.validate();
    Rng rng(derive_seed(config_.seed, 0x6d6f64656cULL));
    for (Modality m : config_.modalities.members()) {
        const int width = input_widths_[int(m)];
        if (width <= 0) throw ShapeError(fmt::format("no input width for active modality {}", to_string(m)));
        const std::string name(to_string(m));
        if (config_.use_llm_embedding)
            heads_[int(m)] = std::make_unique<features::ReductionHead>(name + ".head", config_.dims.of(m), rng, width);
        else
            projections_[int(m)] =
                std::make_unique<features::RawProjection>(name + ".projection", width, config_.dims.of(m), rng);
    }
    expander_ = features::LabelExpander("label.expander", config_.dims.label, rng);
    const int D = config_.input_dim();
    const ModelSettings& s = config_.model;
    switch (config_.architecture) {
        case Architecture::RNN: encoder_ = std::make_unique<RnnEncoder>(D, s.hidden, s.layers, rng); break;
        case Architecture::LSTM: encoder_ = std::make_unique<LstmEncoder>(D, s.hidden, s.layers, rng); break;
        case Architecture::Transformer:
            encoder_ = std::make_unique<TransformerEncoder>(D, config_.window_size, s, rng);
            break;
    }
    readout_ = nn::Linear("readout", s.hidden, output_width(), rng);
}

Var Forecaster::encode_cells(Graph& g, const std::array<Var, kNumModalities>& inputs, Var labels) {
    std::vector<Var> parts;
    for (Modality m : config_.modalities.members()) {
        const Var x = inputs[int(m)];
        if (!x.valid()) throw AssemblyError(fmt::format("missing {} input", to_string(m)));
        if (g.value(x).rows != g.value(labels).rows)
            throw AssemblyError(fmt::format("{} input has {} rows, labels {}", to_string(m), g.value(x).rows,
                                            g.value(labels).rows));
        parts.push_back(heads_[int(m)] ? (*heads_[int(m)])(g, x) : (*projections_[int(m)])(g, x));
    }
    parts.push_back(expander_(g, labels));
    return parts.size() == 1 ? parts.front() : ag::concat_cols(g, parts);
}

Var Forecaster::forward_rows(Graph& g, Var table, const std::vector<int>& rows, int batch) {
    if (g.value(table).cols != input_dim())
        throw ShapeError(fmt::format("forecaster expects width {}, got {}", input_dim(), g.value(table).cols));
    return readout_(g, encoder_->encode(g, table, rows, batch, config_.window_size));
}

Tensor3 Forecaster::forward(const Tensor3& inputs) {
    if (inputs.d0 != config_.window_size || inputs.d2 != input_dim())
        throw ShapeError(fmt::format("forward: input ({},{},{}) but model expects ({},N,{})", inputs.d0, inputs.d1,
                                     inputs.d2, config_.window_size, input_dim()));
    const int w = inputs.d0, N = inputs.d1;
    if (N < 1) throw ShapeError("forward: no regions");
    Matrix table(w * N, inputs.d2);
    table.data = inputs.data;
    std::vector<int> rows(std::size_t(w) * N);
    for (int n = 0; n < N; ++n)
        for (int tau = 0; tau < w; ++tau) rows[std::size_t(n) * w + tau] = tau * N + n;
    Graph g(false);
    const Matrix& out = g.value(forward_rows(g, g.input(std::move(table)), rows, N));
    Tensor3 pred(config_.horizon, N, kNumTargets);
    for (int h = 0; h < config_.horizon; ++h)
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < kNumTargets; ++k) pred(h, n, k) = out(n, h * kNumTargets + k);
    return pred;
}

std::vector<Parameter*> Forecaster::parameters() {
    std::vector<Parameter*> out;
    for (Modality m : kAllModalities) {
        if (heads_[int(m)]) heads_[int(m)]->collect(out);
        if (projections_[int(m)]) projections_[int(m)]->collect(out);
    }
    expander_.collect(out);
    encoder_->collect(out);
    readout_.collect(out);
    return out;
}

std::vector<Parameter*> Forecaster::buffers() {
    std::vector<Parameter*> out;
    for (Modality m : kAllModalities)
        if (heads_[int(m)]) out.push_back(&heads_[int(m)]->input_shift());
    return out;
}

void Forecaster::center_inputs(const features::CellInputs& inputs, const std::vector<int>& cells) {
    if (cells.empty()) return;
    for (Modality m : config_.modalities.members()) {
        if (!heads_[int(m)]) continue;
        const Matrix& t = inputs.tables[int(m)];
        std::vector<double> mean(std::size_t(t.cols), 0.0);
        for (int c : cells)
            for (int j = 0; j < t.cols; ++j) mean[j] += t(c, j);
        for (double& v : mean) v /= double(cells.size());
        heads_[int(m)]->center_on(mean);
    }
}

}  // namespace rentcast::model
