#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rentcast/autograd.hpp"
#include "rentcast/core.hpp"
#include "rentcast/data.hpp"
#include "rentcast/features.hpp"
#include "rentcast/nn.hpp"

namespace rentcast::model {

using ag::Graph;
using ag::Matrix;
using ag::Parameter;
using ag::Var;
using features::Tensor3;

/// Maps a batch of sequences to one hidden vector per sequence.
/// `rows[b * window + tau]` is the table row fed at position tau of sequence b.
class SequenceEncoder {
public:
    virtual ~SequenceEncoder() = default;
    virtual Var encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) = 0;
    virtual void collect(std::vector<Parameter*>& out) = 0;
};

/// Elman recurrence h = tanh(W x + U h + b), stacked.
class RnnEncoder : public SequenceEncoder {
public:
    RnnEncoder(int input, int hidden, int layers, Rng& rng);
    Var encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) override;
    void collect(std::vector<Parameter*>& out) override;

private:
    int hidden_;
    std::vector<nn::Linear> input_, recurrent_;
};

class LstmEncoder : public SequenceEncoder {
public:
    LstmEncoder(int input, int hidden, int layers, Rng& rng);
    Var encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) override;
    void collect(std::vector<Parameter*>& out) override;

private:
    int hidden_;
    std::vector<nn::Linear> input_, recurrent_;  // both emit the 4 gates (i, f, g, o)
};

/// Encoder-only transformer: input projection, learned positional encoding,
/// post-norm layers (self-attention, ReLU feed-forward), last-position readout.
class TransformerEncoder : public SequenceEncoder {
public:
    TransformerEncoder(int input, int window, const ModelSettings& settings, Rng& rng);
    Var encode(Graph& g, Var table, const std::vector<int>& rows, int batch, int window) override;
    void collect(std::vector<Parameter*>& out) override;

private:
    struct Layer {
        nn::Linear q, k, v, out, ff1, ff2;
        nn::LayerNorm norm1, norm2;
    };
    int heads_;
    nn::Linear project_;
    Parameter position_;  // [window, hidden]
    std::vector<Layer> layers_;
};

struct LossBreakdown {
    double reservation_days = 0.0;
    double revenue = 0.0;
    double num_reservations = 0.0;
    LossWeights weights;
    double total = 0.0;

    double operator[](int t) const { return t == 0 ? reservation_days : t == 1 ? revenue : num_reservations; }
};

/// Graph form of the weighted multi-target loss over predictions/targets [rows, horizon * 3]
/// (column h * 3 + k).
struct LossVars {
    Var total;
    std::array<Var, kNumTargets> parts;
};
LossVars loss_graph(Graph& g, Var predictions, Var targets, const LossWeights& weights, int horizon);

/// Per-target MSE over every (horizon, region) cell, total = alpha/beta/gamma weighted sum.
LossBreakdown compute_loss(const Tensor3& predictions, const Tensor3& targets, const LossWeights& weights);

/// Per-modality encoders (reduction heads or raw projections), label expander,
/// shared sequence encoder and the horizon x target readout.
class Forecaster {
public:
    /// `input_widths[m]` is the per-cell input width of each active modality:
    /// 3072 for LLM embeddings (reduction head) or the raw feature count (affine projection).
    Forecaster(const ExperimentConfig& config, std::array<int, kNumModalities> input_widths);

    const ExperimentConfig& config() const { return config_; }
    const std::array<int, kNumModalities>& input_widths() const { return input_widths_; }
    int input_dim() const { return config_.input_dim(); }
    int output_width() const { return config_.horizon * kNumTargets; }

    /// Region-month vectors [rows, D] from per-modality inputs and normalized labels (same rows).
    Var encode_cells(Graph& g, const std::array<Var, kNumModalities>& inputs, Var labels);
    /// Forecasts [batch, horizon * 3] for sequences drawn from `table` (layout as SequenceEncoder).
    Var forward_rows(Graph& g, Var table, const std::vector<int>& rows, int batch);

    /// inputs (window, N, D) -> predictions (horizon, N, 3).
    Tensor3 forward(const Tensor3& inputs);

    std::vector<Parameter*> parameters();
    std::size_t parameter_count() { return nn::count_parameters(parameters()); }
    /// Fixed tensors saved with the weights but not optimized (reduction-head input shifts).
    std::vector<Parameter*> buffers();
    /// Centers every reduction head on the mean of its input over `cells`.
    void center_inputs(const features::CellInputs& inputs, const std::vector<int>& cells);

    features::ReductionHead* head(Modality m) { return heads_[int(m)].get(); }
    features::RawProjection* projection(Modality m) { return projections_[int(m)].get(); }
    features::LabelExpander& label_expander() { return expander_; }
    nn::Linear& readout() { return readout_; }

private:
    ExperimentConfig config_;
    std::array<int, kNumModalities> input_widths_;
    std::array<std::unique_ptr<features::ReductionHead>, kNumModalities> heads_;
    std::array<std::unique_ptr<features::RawProjection>, kNumModalities> projections_;
    features::LabelExpander expander_;
    std::unique_ptr<SequenceEncoder> encoder_;
    nn::Linear readout_;
};

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

struct Checkpoint {
    ExperimentConfig config;
    std::array<int, kNumModalities> input_widths{};
    data::NormStats norm;
    int epoch = 0;
    double val_total = 0.0;
    std::vector<Parameter> tensors;
};

Checkpoint snapshot(Forecaster& f, const data::NormStats& norm, int epoch, double val_total);
/// Copies tensors into `f` by name; throws ShapeError on missing names or shape mismatch.
void restore(Forecaster& f, const Checkpoint& ckpt);
std::unique_ptr<Forecaster> instantiate(const Checkpoint& ckpt);

/// Magic, JSON header (config, normalization stats, tensor table), raw little-endian float64 payload.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rentcast::model
