#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rentcast/autograd.hpp"
#include "rentcast/core.hpp"
#include "rentcast/data.hpp"
#include "rentcast/embed.hpp"
#include "rentcast/nn.hpp"

namespace rentcast::features {

using ag::Graph;
using ag::Matrix;
using ag::Parameter;
using ag::Var;

/// Dense rank-3 tensor, row-major over (d0, d1, d2).
struct Tensor3 {
    int d0 = 0, d1 = 0, d2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int a, int b, int c) : d0(a), d1(b), d2(c), data(std::size_t(a) * b * c, 0.0) {}
    double& operator()(int i, int j, int k) { return data[(std::size_t(i) * d1 + j) * d2 + k]; }
    double operator()(int i, int j, int k) const { return data[(std::size_t(i) * d1 + j) * d2 + k]; }
    bool operator==(const Tensor3&) const = default;
};

/// Fully connected reduction 3072 -> 768 -> 256 -> 128 -> out_dim, ReLU
/// between layers, final layer linear.
class ReductionHead {
public:
    static constexpr std::array<int, 3> kHiddenWidths = {768, 256, 128};

    ReductionHead() = default;
    ReductionHead(const std::string& name, int out_dim, Rng& rng, int in_dim = embed::kEmbeddingDim);

    /// x [rows, in_dim] -> [rows, out_dim]; the fixed input shift is added first.
    Var operator()(Graph& g, Var x);
    std::vector<double> reduce(std::span<const double> embedding);

    int in_dim() const { return layers_.front().in_features(); }
    int out_dim() const { return layers_.back().out_features(); }
    std::vector<nn::Linear>& layers() { return layers_; }
    void collect(std::vector<Parameter*>& out);

    /// Non-trained per-dimension shift [1, in_dim] (zero by default). Setting it
    /// to minus the training mean centers the input without changing the model class.
    Parameter& input_shift() { return shift_; }
    void center_on(std::span<const double> mean);

private:
    std::vector<nn::Linear> layers_;
    Parameter shift_;
};

/// Single affine map of the normalized label triple to `out_dim` (4).
class LabelExpander {
public:
    LabelExpander() = default;
    LabelExpander(const std::string& name, int out_dim, Rng& rng);

    Var operator()(Graph& g, Var labels) { return layer_(g, labels); }
    std::vector<double> expand(const LabelTriple& normalized);

    nn::Linear& layer() { return layer_; }
    int out_dim() const { return layer_.out_features(); }
    void collect(std::vector<Parameter*>& out) { layer_.collect(out); }

private:
    nn::Linear layer_;
};

/// Single affine projection used by the tabular (non-LLM) path.
class RawProjection {
public:
    RawProjection() = default;
    RawProjection(const std::string& name, int in_dim, int out_dim, Rng& rng) : layer_(name, in_dim, out_dim, rng) {}

    Var operator()(Graph& g, Var x) { return layer_(g, x); }
    int in_dim() const { return layer_.in_features(); }
    int out_dim() const { return layer_.out_features(); }
    void collect(std::vector<Parameter*>& out) { layer_.collect(out); }

private:
    nn::Linear layer_;
};

struct RegionMonthEmbedding {
    RegionId region;
    int month = 0;
    std::vector<double> values;
};

/// Offsets of each segment inside a concatenated region-month vector for the
/// active modalities (canonical order, label last). Inactive modalities get -1.
struct SegmentLayout {
    std::array<int, kNumModalities> offset{-1, -1, -1};
    int label_offset = 0;
    int total = 0;
};
SegmentLayout segment_layout(const EmbeddingDims& dims, const ModalitySet& active);

/// Concatenates reduced modality parts and the expanded label vector.
/// Throws AssemblyError when an active part is missing or has the wrong width.
RegionMonthEmbedding assemble_region_month(const RegionId& region, int month,
                                           const std::map<Modality, std::vector<double>>& parts,
                                           const std::vector<double>& expanded_label, const EmbeddingDims& dims,
                                           const ModalitySet& active);

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

/// Window samples identified by their first target month t: inputs are months
/// [t - window, t - 1], targets [t, t + horizon - 1].
struct WindowIndex {
    std::vector<int> train, val, test;
    std::size_t total() const { return train.size() + val.size() + test.size(); }
};

/// A sample belongs to the split holding month t and requires all target
/// months inside that split; t >= window. Throws AssemblyError when no split
/// receives a sample.
WindowIndex enumerate_windows(int total_months, int window, int horizon, int stride,
                              const data::SplitAssignment& split);

struct WindowSample {
    Tensor3 inputs;   // (window, N, D)
    Tensor3 targets;  // (horizon, N, 3) normalized log labels
    int first_target_month = 0;
};

struct WindowedDataset {
    std::vector<WindowSample> train, val, test;
};

/// Materializes samples from a per-cell table of region-month vectors
/// (rows = region * months + month) and normalized labels [cells, 3].
WindowedDataset build_windows(const Matrix& region_month, const Matrix& labels, int regions, int months,
                              int window, int horizon, int stride, const data::SplitAssignment& split);

/// Binary window cache: header + little-endian float32 tensors.
void write_window_cache(const std::filesystem::path& path, const WindowedDataset& ds);
WindowedDataset read_window_cache(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Per-cell model inputs
// ---------------------------------------------------------------------------

/// Input rows for every panel cell, one table per active modality
/// (3072-wide embeddings or raw tabular features), plus normalized labels.
struct CellInputs {
    int regions = 0;
    int months = 0;
    std::array<Matrix, kNumModalities> tables;  // [cells, width]; empty when inactive
    Matrix labels;                              // [cells, 3]

    int cells() const { return regions * months; }
    int cell(int region, int month) const { return region * months + month; }
    bool has(Modality m) const { return tables[int(m)].rows > 0; }
    int width(Modality m) const { return tables[int(m)].cols; }
};

/// Normalized label table [cells, 3].
Matrix normalized_labels(const data::Panel& panel, const data::NormStats& stats);

CellInputs from_embeddings(const embed::PanelEmbeddings& emb, const data::Panel& panel,
                           const data::NormStats& stats);

/// Tabular features for the non-LLM path: numeric aggregates as-is,
/// categoricals one-hot (summed over listings) on the training vocabulary,
/// every column z-scored on training-split cells.
class RawFeatureEncoder {
public:
    static RawFeatureEncoder fit(const data::Panel& panel, const ModalitySet& modalities,
                                 const data::MonthRange& train);

    const std::vector<std::string>& columns(Modality m) const { return columns_[int(m)]; }
    int dim(Modality m) const { return int(columns_[int(m)].size()); }
    /// Unscaled feature row for one cell.
    std::vector<double> raw_row(const data::Panel& panel, Modality m, int cell) const;
    /// z-scored table [cells, dim]; counts categorical values outside the vocabulary.
    Matrix transform(const data::Panel& panel, Modality m) const;
    std::size_t unseen_values(const data::Panel& panel) const;
    const std::vector<std::string>& vocabulary(const std::string& categorical) const;

private:
    ModalitySet modalities_;
    std::array<std::vector<std::string>, kNumModalities> columns_;
    std::array<std::vector<double>, kNumModalities> mean_, std_;
    std::map<std::string, std::vector<std::string>> vocab_;  // categorical label -> sorted values
};

CellInputs from_raw_features(const RawFeatureEncoder& encoder, const data::Panel& panel,
                             const ModalitySet& modalities, const data::NormStats& stats);

}  // namespace rentcast::features
