#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rentcast {

/// Administrative district (dong) identifier. Opaque, non-empty.
class RegionId {
public:
    RegionId() = default;
    explicit RegionId(std::string code);

    const std::string& code() const noexcept { return code_; }

    auto operator<=>(const RegionId&) const = default;

private:
    std::string code_;
};

/// Calendar month, rendered as "YYYY-MM".
struct YearMonth {
    int year = 2017;
    int month = 1;  // 1..12

    static YearMonth parse(std::string_view text);
    std::string str() const;
    YearMonth plus(int months) const;

    auto operator<=>(const YearMonth&) const = default;
};

/// Zero-based month offset from a dataset's first month.
struct MonthIndex {
    int index = 0;
    YearMonth calendar;
};

/// Whole months between `start` and `month`. Throws std::out_of_range when month < start.
MonthIndex month_index_from_calendar(YearMonth start, YearMonth month);
YearMonth calendar_of(YearMonth start, int index);

enum class Target : int { ReservationDays = 0, Revenue = 1, NumReservations = 2 };
inline constexpr int kNumTargets = 3;
inline constexpr int kHorizon = 3;
inline constexpr std::array<std::string_view, kNumTargets> kTargetNames = {
    "reservation_days", "revenue", "num_reservations"};

/// The three forecast targets for one region-month.
struct LabelTriple {
    double reservation_days = 0.0;
    double revenue = 0.0;
    double num_reservations = 0.0;

    double operator[](int t) const;
    double& operator[](int t);
    bool operator==(const LabelTriple&) const = default;
};

enum class Modality : int { Accessibility = 0, HumanFlow = 1, Airbnb = 2 };
inline constexpr int kNumModalities = 3;
inline constexpr std::array<Modality, kNumModalities> kAllModalities = {
    Modality::Accessibility, Modality::HumanFlow, Modality::Airbnb};

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view text);
/// Display label used in result tables ("Human Flow").
std::string_view display_name(Modality m);

/// Subset of input modalities; iteration is always in canonical order.
class ModalitySet {
public:
    ModalitySet() = default;
    ModalitySet(std::initializer_list<Modality> ms);
    static ModalitySet all();

    bool contains(Modality m) const { return bits_ & (1u << static_cast<int>(m)); }
    void insert(Modality m) { bits_ |= (1u << static_cast<int>(m)); }
    bool empty() const { return bits_ == 0; }
    int size() const;
    std::vector<Modality> members() const;
    /// Comma-joined canonical names, "" for the empty set.
    std::string str() const;
    static ModalitySet parse(std::string_view text);
    /// "Accessibility + Human Flow" style label.
    std::string label() const;

    bool operator==(const ModalitySet&) const = default;

private:
    unsigned bits_ = 0;
};

enum class Architecture { RNN, LSTM, Transformer };
std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view text);

/// Output widths of the modality reduction heads and the label expander.
struct EmbeddingDims {
    int accessibility = 48;
    int human_flow = 48;
    int airbnb = 128;
    int label = 4;

    int total() const { return accessibility + human_flow + airbnb + label; }
    int of(Modality m) const;
    /// Width of the concatenated input for the given active modalities.
    int total_for(const ModalitySet& active) const;
    std::string str() const;  // "48/48/128/4"

    bool operator==(const EmbeddingDims&) const = default;
};

struct LossWeights {
    double alpha = 1.0;  // reservation days
    double beta = 1.0;   // revenue
    double gamma = 1.0;  // number of reservations

    double operator[](int t) const { return t == 0 ? alpha : t == 1 ? beta : gamma; }
    bool operator==(const LossWeights&) const = default;
};

struct SplitSpec {
    int train = 51;
    int val = 8;
    int test = 8;

    int total() const { return train + val + test; }
    bool operator==(const SplitSpec&) const = default;
};

struct ModelSettings {
    int hidden = 128;
    int layers = 2;
    int heads = 4;
    int ffn = 256;

    bool operator==(const ModelSettings&) const = default;
};

struct TrainSettings {
    double learning_rate = 1e-3;
    int max_epochs = 500;
    int patience = 20;

    bool operator==(const TrainSettings&) const = default;
};

struct EmbedSettings {
    std::string backend = "numeric";  // hash | numeric | http
    std::string cache_dir;            // empty: in-memory only
    std::string endpoint;             // http backend base URL
    std::string model_id;             // empty: backend default
    int max_in_flight = 4;
    int workers = 1;

    bool operator==(const EmbedSettings&) const = default;
};

struct DataSettings {
    std::string path;    // directory holding the four tables
    std::string schema;  // optional column-mapping file
    bool select_active_regions = true;

    bool operator==(const DataSettings&) const = default;
};

/// Every knob one training run consumes. Immutable once validated.
struct ExperimentConfig {
    std::string variant;  // grid cell id; empty for standalone runs
    int window_size = 6;
    int horizon = kHorizon;
    int stride = 1;
    EmbeddingDims dims;
    LossWeights loss_weights;
    std::uint64_t seed = 43;
    Architecture architecture = Architecture::LSTM;
    ModalitySet modalities = ModalitySet::all();
    bool use_llm_embedding = true;
    SplitSpec split;
    ModelSettings model;
    TrainSettings train;
    EmbedSettings embed;
    DataSettings data;

    /// Label-history-only run: no modality embeddings, just the expanded labels.
    bool label_only() const { return modalities.empty(); }
    int input_dim() const { return dims.total_for(modalities); }

    /// Throws ConfigError on the first violated invariant.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig default_config();

}  // namespace rentcast
