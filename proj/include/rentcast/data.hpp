#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rentcast/core.hpp"

namespace rentcast::data {

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One listing in one month. Every attribute may be missing.
struct ListingRecord {
    std::string listing_id;
    RegionId region;
    int month = 0;

    struct Operational {
        std::optional<int> available_days;
        std::optional<int> blocked_days;
    } operational;
    struct Accommodation {
        std::optional<std::string> property_type;
        std::optional<std::string> listing_type;
        std::optional<double> bedrooms;
        std::optional<double> bathrooms;
        std::optional<double> max_guests;
    } accommodation;
    struct Host {
        std::optional<double> response_rate;
        std::optional<std::string> response_time;
        std::optional<bool> superhost;
    } host;
    struct Policy {
        std::optional<std::string> cancellation_policy;
    } policy;
    struct Checkin {
        std::optional<std::string> checkin_time;
        std::optional<std::string> checkout_time;
        std::optional<double> minimum_stay;
    } checkin;
    struct Other {
        std::optional<double> num_photos;
        std::optional<bool> instantbook;
        std::optional<bool> pets_allowed;
        std::optional<bool> property_manager;
    } other;
    struct Response {
        std::optional<double> overall_rating;
        std::optional<double> num_reviews;
    } response;
};

/// Wide numeric record (accessibility or human flow) for one region-month.
struct VariableRecord {
    RegionId region;
    int month = 0;
    std::map<std::string, double> values;

    double at(const std::string& name) const;
};
using AccessibilityRecord = VariableRecord;
using HumanFlowRecord = VariableRecord;

// ---------------------------------------------------------------------------
// Canonical variable schema
// ---------------------------------------------------------------------------

struct NumericVariable {
    std::string column;   // canonical CSV column
    std::string label;    // display name
    bool integer = false; // rendered without decimals when integral
};

/// Accessibility variables in canonical order.
const std::vector<NumericVariable>& accessibility_variables();
/// Human-flow variables in canonical order (total, age x gender grid, foreign long/short).
const std::vector<NumericVariable>& human_flow_variables();
/// Age bands of the domestic floating-population grid ("10s".."70s").
const std::vector<std::string>& age_bands();

struct CategoricalField {
    std::string column;
    std::string label;
    std::function<const std::optional<std::string>&(const ListingRecord&)> get;
    std::function<std::optional<std::string>&(ListingRecord&)> set;
};
struct BinaryField {
    std::string column;
    std::string label;
    std::function<const std::optional<bool>&(const ListingRecord&)> get;
    std::function<std::optional<bool>&(ListingRecord&)> set;
};
struct NumericField {
    std::string column;
    std::string label;
    std::function<std::optional<double>(const ListingRecord&)> get;
    std::function<void(ListingRecord&, std::optional<double>)> set;
};

const std::vector<CategoricalField>& listing_categorical_fields();
const std::vector<BinaryField>& listing_binary_fields();
const std::vector<NumericField>& listing_numeric_fields();
/// listings.csv column order.
std::vector<std::string> listing_columns();

// ---------------------------------------------------------------------------
// Region-month Airbnb summary
// ---------------------------------------------------------------------------

struct CategoricalSummary {
    std::string name;
    int with_data = 0;
    std::map<std::string, int> counts;  // ordered by value
};

struct BinarySummary {
    std::string name;
    int with_data = 0;
    int true_count = 0;
};

struct NumericSummary {
    std::string name;
    int with_data = 0;
    double mean = 0.0;
    double std = 0.0;  // population
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct AirbnbRegionSummary {
    RegionId region;
    int month = 0;
    int total_listings = 0;
    std::vector<CategoricalSummary> categorical;
    std::vector<BinarySummary> binary;
    std::vector<NumericSummary> numeric;
};

/// Aggregates one region-month's listings. Missing values are excluded from
/// statistics and from with-data counts.
AirbnbRegionSummary summarize_airbnb(std::span<const ListingRecord> listings, const RegionId& region, int month);

/// Population mean/std/median/min/max of a non-empty sample.
NumericSummary describe(std::string name, std::vector<double> values);

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

/// Dense region x month panel. Cell index = region * months + month.
struct Panel {
    YearMonth start;
    int months = 0;
    std::vector<RegionId> regions;  // sorted by code

    std::vector<std::vector<ListingRecord>> listings;
    std::vector<AccessibilityRecord> accessibility;
    std::vector<HumanFlowRecord> human_flow;
    std::vector<LabelTriple> labels;
    std::vector<std::uint8_t> accessibility_missing;
    std::vector<std::uint8_t> human_flow_missing;
    std::vector<std::uint8_t> labels_missing;

    int num_regions() const { return int(regions.size()); }
    int cell(int region, int month) const { return region * months + month; }
    int region_index(const RegionId& id) const;

    /// Restricts the panel to `keep` (order follows this panel's sorted order).
    Panel subset(const std::vector<RegionId>& keep) const;
    /// Mean number of listings per month for every region.
    std::map<RegionId, double> mean_listing_counts() const;
};

/// Source-column names per table: canonical name -> source column.
struct SchemaMapping {
    std::map<std::string, std::string> listings;
    std::map<std::string, std::string> accessibility;
    std::map<std::string, std::string> human_flow;
    std::map<std::string, std::string> labels;

    /// INI file with [listings] [accessibility] [human_flow] [labels] sections.
    static SchemaMapping load(const std::filesystem::path& path);
};

struct PanelPaths {
    std::filesystem::path listings;
    std::filesystem::path accessibility;
    std::filesystem::path human_flow;
    std::filesystem::path labels;

    static PanelPaths in_directory(const std::filesystem::path& dir);
};

/// Reads the four tables and densifies them onto the region x month grid.
/// Missing accessibility / human-flow / label cells are zero-filled and flagged.
Panel load_panel(const PanelPaths& paths, const SchemaMapping& schema = {});

/// Writes the four canonical tables into `dir`.
void write_panel(const Panel& panel, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Region selection, normalisation, splits
// ---------------------------------------------------------------------------

struct ActiveRegionSelection {
    double threshold = 0.0;  // 75th percentile of per-region means
    std::vector<RegionId> selected;
};

/// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile_linear(std::vector<double> values, double q);

/// Regions whose mean listing count strictly exceeds the third quartile.
/// Throws ConfigError with fewer than 4 regions.
ActiveRegionSelection select_active_regions(const std::map<RegionId, double>& listing_counts);

struct MonthRange {
    int first = 0;
    int last = -1;  // inclusive

    bool contains(int m) const { return m >= first && m <= last; }
    int size() const { return last - first + 1; }
    bool operator==(const MonthRange&) const = default;
};

struct SplitAssignment {
    MonthRange train;
    MonthRange val;
    MonthRange test;
};

SplitAssignment assign_splits(int total_months, const SplitSpec& split);

/// Log-label z-score statistics (training months only) plus optional feature stats.
struct NormStats {
    std::array<double, kNumTargets> label_mean{0.0, 0.0, 0.0};
    std::array<double, kNumTargets> label_std{1.0, 1.0, 1.0};
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
};

/// Population mean/std of log1p(label) over the given months; zero variance -> std 1.
NormStats compute_label_stats(const Panel& panel, const MonthRange& months);

/// (log1p(y) - mean) / std per target. Throws std::domain_error on negative input.
LabelTriple transform_labels(const LabelTriple& raw, const NormStats& stats);
LabelTriple inverse_transform_labels(const LabelTriple& normalized, const NormStats& stats);

/// Population mean/std per column of a row-major [rows, cols] table; std 0 -> 1.
void column_stats(std::span<const double> table, int rows, int cols, std::vector<double>& mean,
                  std::vector<double>& std);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Label signal planted by the generator. Per region r, month m, target k:
///
///   log y = offset_k + level_r + slope_r * m / 12
///         + seasonal_amplitude * sin(2 pi (m + phase_r) / 12)
///         + flow_effect * driver_r(m - flow_lag)
///         + noise * eps
///
/// driver_r is a unit-variance AR(1) series that also drives the designated
/// human-flow variables (short-term foreign visitors and the 20s/30s
/// population cells), so the planted signal is observable only through
/// human flow, `flow_lag` months ahead of the labels.
struct SignalSpec {
    double seasonal_amplitude = 0.25;
    double level_spread = 0.5;
    double slope_spread = 0.15;
    double flow_effect = 0.6;
    int flow_lag = 3;
    double flow_persistence = 0.3;
    double noise = 0.08;
};

struct SyntheticSpec {
    int regions = 20;
    int months = 36;
    std::uint64_t seed = 7;
    YearMonth start{2017, 1};
    int min_window = 6;  // months must cover window + horizon + 3
    SignalSpec signal;
};

struct RegionTruth {
    RegionId region;
    double level = 0.0;
    double slope = 0.0;
    double phase = 0.0;
    double mean_listings = 0.0;
    std::vector<double> driver;  // indexed by month + flow_lag
};

/// Per-target log offsets (reservation days, revenue, reservations).
inline constexpr std::array<double, kNumTargets> kSyntheticTargetOffsets = {5.3, 9.9, 4.1};

struct SyntheticDataset {
    Panel panel;
    std::vector<RegionTruth> truth;
};

/// Closed-form noiseless log label for one cell (used by the generator and its tests).
double synthetic_log_label(const RegionTruth& truth, const SignalSpec& signal, int target, int month);

SyntheticDataset synthesize(const SyntheticSpec& spec);
/// synthesize() then write the four tables into `dir` (plus truth.csv on request).
SyntheticDataset generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir,
                                    bool write_truth = false);

}  // namespace rentcast::data
