#include "rentcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rentcast/errors.hpp"

namespace rentcast::features {

ReductionHead::ReductionHead(const std::string& name, int out_dim, Rng& rng, int in_dim) {
    if (out_dim <= 0) throw ShapeError(fmt::format("{}: output width must be positive", name));
    int prev = in_dim;
    int i = 0;
    for (int w : kHiddenWidths) {
        layers_.emplace_back(fmt::format("{}.fc{}", name, i++), prev, w, rng, nn::Linear::Init::He);
        prev = w;
    }
    layers_.emplace_back(fmt::format("{}.fc{}", name, i), prev, out_dim, rng);
    shift_ = Parameter(name + ".input_shift", 1, in_dim);
}

void ReductionHead::center_on(std::span<const double> mean) {
    if (int(mean.size()) != in_dim())
        throw ShapeError(fmt::format("input center has {} values, head expects {}", mean.size(), in_dim()));
    for (std::size_t i = 0; i < mean.size(); ++i) shift_.value.data[i] = -mean[i];
}

Var ReductionHead::operator()(Graph& g, Var x) {
    if (g.value(x).cols != in_dim())
        throw ShapeError(fmt::format("reduction head expects width {}, got {}", in_dim(), g.value(x).cols));
    x = ag::add_positional(g, x, g.input_ref(shift_.value), 1);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i](g, x);
        if (i + 1 < layers_.size()) x = ag::relu(g, x);
    }
    return x;
}

std::vector<double> ReductionHead::reduce(std::span<const double> embedding) {
    if (int(embedding.size()) != in_dim())
        throw ShapeError(fmt::format("reduction head expects {} values, got {}", in_dim(), embedding.size()));
    Graph g(false);
    Matrix in(1, in_dim());
    std::copy(embedding.begin(), embedding.end(), in.data.begin());
    return g.value((*this)(g, g.input(std::move(in)))).data;
}

void ReductionHead::collect(std::vector<Parameter*>& out) {
    for (auto& l : layers_) l.collect(out);
}

LabelExpander::LabelExpander(const std::string& name, int out_dim, Rng& rng) : layer_(name, kNumTargets, out_dim, rng) {}

std::vector<double> LabelExpander::expand(const LabelTriple& normalized) {
    Graph g(false);
    Matrix in(1, kNumTargets);
    for (int t = 0; t < kNumTargets; ++t) in.data[t] = normalized[t];
    return g.value(layer_(g, g.input(std::move(in)))).data;
}

SegmentLayout segment_layout(const EmbeddingDims& dims, const ModalitySet& active) {
    SegmentLayout s;
    for (Modality m : active.members()) {
        s.offset[int(m)] = s.total;
        s.total += dims.of(m);
    }
    s.label_offset = s.total;
    s.total += dims.label;
    return s;
}

RegionMonthEmbedding assemble_region_month(const RegionId& region, int month,
                                           const std::map<Modality, std::vector<double>>& parts,
                                           const std::vector<double>& expanded_label, const EmbeddingDims& dims,
                                           const ModalitySet& active) {
    RegionMonthEmbedding out{region, month, {}};
    out.values.reserve(std::size_t(dims.total_for(active)));
    for (Modality m : active.members()) {
        auto it = parts.find(m);
        if (it == parts.end())
            throw AssemblyError(fmt::format("region {} month {}: missing {} part", region.code(), month,
                                            to_string(m)));
        if (int(it->second.size()) != dims.of(m))
            throw AssemblyError(fmt::format("region {} month {}: {} part has width {}, expected {}", region.code(),
                                            month, to_string(m), it->second.size(), dims.of(m)));
        out.values.insert(out.values.end(), it->second.begin(), it->second.end());
    }
    if (int(expanded_label.size()) != dims.label)
        throw AssemblyError(fmt::format("region {} month {}: label part has width {}, expected {}", region.code(),
                                        month, expanded_label.size(), dims.label));
    out.values.insert(out.values.end(), expanded_label.begin(), expanded_label.end());
    return out;
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

WindowIndex enumerate_windows(int total_months, int window, int horizon, int stride,
                              const data::SplitAssignment& split) {
    if (window < 1 || horizon < 1 || stride < 1)
        throw ConfigError("window, horizon and stride must be positive");
    WindowIndex idx;
    for (int t = window; t + horizon - 1 < total_months; t += stride) {
        for (auto [range, dest] : {std::pair{split.train, &idx.train}, std::pair{split.val, &idx.val},
                                   std::pair{split.test, &idx.test}}) {
            if (t >= range.first && t + horizon - 1 <= range.last) dest->push_back(t);
        }
    }
    if (idx.total() == 0)
        throw AssemblyError(fmt::format("no window samples: {} months cannot fit window {} + horizon {}",
                                        total_months, window, horizon));
    return idx;
}

namespace {

WindowSample make_sample(const Matrix& table, const Matrix& labels, int regions, int months, int window,
                         int horizon, int t) {
    WindowSample s{Tensor3(window, regions, table.cols), Tensor3(horizon, regions, kNumTargets), t};
    for (int tau = 0; tau < window; ++tau)
        for (int r = 0; r < regions; ++r) {
            auto row = table.row(r * months + t - window + tau);
            std::copy(row.begin(), row.end(), s.inputs.data.begin() + (std::size_t(tau) * regions + r) * table.cols);
        }
    for (int h = 0; h < horizon; ++h)
        for (int r = 0; r < regions; ++r)
            for (int k = 0; k < kNumTargets; ++k) s.targets(h, r, k) = labels(r * months + t + h, k);
    return s;
}

}  // namespace

WindowedDataset build_windows(const Matrix& region_month, const Matrix& labels, int regions, int months,
                              int window, int horizon, int stride, const data::SplitAssignment& split) {
    if (regions < 1) throw AssemblyError("windowing needs at least one region");
    if (region_month.rows != regions * months || labels.rows != regions * months || labels.cols != kNumTargets)
        throw ShapeError("windowing: table rows must equal regions x months");
    const WindowIndex idx = enumerate_windows(months, window, horizon, stride, split);
    WindowedDataset ds;
    for (int t : idx.train) ds.train.push_back(make_sample(region_month, labels, regions, months, window, horizon, t));
    for (int t : idx.val) ds.val.push_back(make_sample(region_month, labels, regions, months, window, horizon, t));
    for (int t : idx.test) ds.test.push_back(make_sample(region_month, labels, regions, months, window, horizon, t));
    return ds;
}

namespace {

constexpr char kWindowMagic[8] = {'R', 'C', 'W', 'I', 'N', '0', '0', '1'};

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IngestError("window cache truncated");
    return v;
}

void write_tensor(std::ostream& os, const Tensor3& t) {
    write_u32(os, std::uint32_t(t.d0));
    write_u32(os, std::uint32_t(t.d1));
    write_u32(os, std::uint32_t(t.d2));
    std::vector<float> f(t.data.begin(), t.data.end());
    os.write(reinterpret_cast<const char*>(f.data()), std::streamsize(f.size() * sizeof(float)));
}

Tensor3 read_tensor(std::istream& is) {
    const int a = int(read_u32(is)), b = int(read_u32(is)), c = int(read_u32(is));
    Tensor3 t(a, b, c);
    std::vector<float> f(t.data.size());
    is.read(reinterpret_cast<char*>(f.data()), std::streamsize(f.size() * sizeof(float)));
    if (!is) throw IngestError("window cache truncated");
    std::copy(f.begin(), f.end(), t.data.begin());
    return t;
}

}  // namespace

void write_window_cache(const std::filesystem::path& path, const WindowedDataset& ds) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(kWindowMagic, sizeof kWindowMagic);
    for (const auto* part : {&ds.train, &ds.val, &ds.test}) {
        write_u32(os, std::uint32_t(part->size()));
        for (const auto& s : *part) {
            write_u32(os, std::uint32_t(s.first_target_month));
            write_tensor(os, s.inputs);
            write_tensor(os, s.targets);
        }
    }
    if (!os) throw IngestError("cannot write window cache " + path.string());
}

WindowedDataset read_window_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open window cache " + path.string());
    char magic[sizeof kWindowMagic] = {};
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kWindowMagic, sizeof magic) != 0)
        throw IngestError("not a window cache: " + path.string());
    WindowedDataset ds;
    for (auto* part : {&ds.train, &ds.val, &ds.test}) {
        const std::uint32_t n = read_u32(is);
        for (std::uint32_t i = 0; i < n; ++i) {
            WindowSample s;
            s.first_target_month = int(read_u32(is));
            s.inputs = read_tensor(is);
            s.targets = read_tensor(is);
            part->push_back(std::move(s));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Cell inputs
// ---------------------------------------------------------------------------

Matrix normalized_labels(const data::Panel& panel, const data::NormStats& stats) {
    const int cells = panel.num_regions() * panel.months;
    Matrix out(cells, kNumTargets);
    for (int c = 0; c < cells; ++c) {
        const LabelTriple z = data::transform_labels(panel.labels[c], stats);
        for (int t = 0; t < kNumTargets; ++t) out(c, t) = z[t];
    }
    return out;
}

CellInputs from_embeddings(const embed::PanelEmbeddings& emb, const data::Panel& panel,
                           const data::NormStats& stats) {
    CellInputs in;
    in.regions = panel.num_regions();
    in.months = panel.months;
    if (emb.cells != in.cells()) throw ShapeError("embedding table does not cover the panel");
    for (Modality m : kAllModalities) {
        if (!emb.has(m)) continue;
        Matrix& t = in.tables[int(m)];
        t = Matrix(in.cells(), embed::kEmbeddingDim);
        const auto& src = emb.values[int(m)];
        std::copy(src.begin(), src.end(), t.data.begin());
    }
    in.labels = normalized_labels(panel, stats);
    return in;
}

namespace {

std::vector<std::string> airbnb_numeric_columns() {
    std::vector<std::string> cols = {"total_listings"};
    for (const auto& f : data::listing_binary_fields()) cols.push_back(f.column + "_true");
    for (const auto& f : data::listing_numeric_fields()) cols.push_back(f.column + "_mean");
    return cols;
}

}  // namespace

RawFeatureEncoder RawFeatureEncoder::fit(const data::Panel& panel, const ModalitySet& modalities,
                                         const data::MonthRange& train) {
    RawFeatureEncoder enc;
    enc.modalities_ = modalities;
    for (const auto& v : data::accessibility_variables())
        enc.columns_[int(Modality::Accessibility)].push_back(v.column);
    for (const auto& v : data::human_flow_variables()) enc.columns_[int(Modality::HumanFlow)].push_back(v.column);

    auto& airbnb = enc.columns_[int(Modality::Airbnb)];
    airbnb = airbnb_numeric_columns();
    for (const auto& f : data::listing_categorical_fields()) {
        std::set<std::string> values;
        for (int r = 0; r < panel.num_regions(); ++r)
            for (int m = train.first; m <= train.last; ++m)
                for (const auto& l : panel.listings[panel.cell(r, m)])
                    if (const auto& v = f.get(l)) values.insert(*v);
        auto& vocab = enc.vocab_[f.column];
        vocab.assign(values.begin(), values.end());
        for (const auto& v : vocab) airbnb.push_back(f.column + "=" + v);
    }

    for (Modality m : kAllModalities) {
        const int width = enc.dim(m);
        std::vector<double> train_rows;
        int rows = 0;
        if (modalities.contains(m))
            for (int r = 0; r < panel.num_regions(); ++r)
                for (int t = train.first; t <= train.last; ++t) {
                    auto row = enc.raw_row(panel, m, panel.cell(r, t));
                    train_rows.insert(train_rows.end(), row.begin(), row.end());
                    ++rows;
                }
        data::column_stats(train_rows, rows, width, enc.mean_[int(m)], enc.std_[int(m)]);
    }
    return enc;
}

const std::vector<std::string>& RawFeatureEncoder::vocabulary(const std::string& categorical) const {
    auto it = vocab_.find(categorical);
    if (it == vocab_.end()) throw std::out_of_range("no categorical column " + categorical);
    return it->second;
}

std::vector<double> RawFeatureEncoder::raw_row(const data::Panel& panel, Modality m, int cell) const {
    std::vector<double> row;
    row.reserve(columns_[int(m)].size());
    switch (m) {
        case Modality::Accessibility:
            for (const auto& v : data::accessibility_variables()) row.push_back(panel.accessibility[cell].at(v.column));
            break;
        case Modality::HumanFlow:
            for (const auto& v : data::human_flow_variables()) row.push_back(panel.human_flow[cell].at(v.column));
            break;
        case Modality::Airbnb: {
            const auto& listings = panel.listings[cell];
            row.push_back(double(listings.size()));
            for (const auto& f : data::listing_binary_fields()) {
                int n = 0;
                for (const auto& l : listings)
                    if (const auto& v = f.get(l); v && *v) ++n;
                row.push_back(n);
            }
            for (const auto& f : data::listing_numeric_fields()) {
                double sum = 0.0;
                int n = 0;
                for (const auto& l : listings)
                    if (auto v = f.get(l)) {
                        sum += *v;
                        ++n;
                    }
                row.push_back(n ? sum / n : 0.0);
            }
            for (const auto& f : data::listing_categorical_fields()) {
                const auto& vocab = vocab_.at(f.column);
                std::vector<double> counts(vocab.size(), 0.0);
                for (const auto& l : listings)
                    if (const auto& v = f.get(l)) {
                        auto it = std::lower_bound(vocab.begin(), vocab.end(), *v);
                        if (it != vocab.end() && *it == *v) counts[std::size_t(it - vocab.begin())] += 1.0;
                    }
                row.insert(row.end(), counts.begin(), counts.end());
            }
            break;
        }
    }
    return row;
}

Matrix RawFeatureEncoder::transform(const data::Panel& panel, Modality m) const {
    const int cells = panel.num_regions() * panel.months;
    const int width = dim(m);
    Matrix out(cells, width);
    const auto& mean = mean_[int(m)];
    const auto& sd = std_[int(m)];
    for (int c = 0; c < cells; ++c) {
        const auto row = raw_row(panel, m, c);
        for (int j = 0; j < width; ++j) out(c, j) = (row[j] - mean[j]) / sd[j];
    }
    return out;
}

std::size_t RawFeatureEncoder::unseen_values(const data::Panel& panel) const {
    std::size_t n = 0;
    for (const auto& cell : panel.listings)
        for (const auto& l : cell)
            for (const auto& f : data::listing_categorical_fields())
                if (const auto& v = f.get(l)) {
                    const auto& vocab = vocab_.at(f.column);
                    if (!std::binary_search(vocab.begin(), vocab.end(), *v)) ++n;
                }
    return n;
}

CellInputs from_raw_features(const RawFeatureEncoder& encoder, const data::Panel& panel,
                             const ModalitySet& modalities, const data::NormStats& stats) {
    CellInputs in;
    in.regions = panel.num_regions();
    in.months = panel.months;
    for (Modality m : modalities.members()) in.tables[int(m)] = encoder.transform(panel, m);
    in.labels = normalized_labels(panel, stats);
    if (const auto unseen = encoder.unseen_values(panel))
        spdlog::info("{} categorical values outside the training vocabulary map to zero columns", unseen);
    return in;
}

}  // namespace rentcast::features
