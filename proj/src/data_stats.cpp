#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "rentcast/data.hpp"
#include "rentcast/errors.hpp"

namespace rentcast::data {

NumericSummary describe(std::string name, std::vector<double> values) {
    NumericSummary s;
    s.name = std::move(name);
    s.with_data = int(values.size());
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    const double n = double(values.size());
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / n);
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    s.min = values.front();
    s.max = values.back();
    return s;
}

AirbnbRegionSummary summarize_airbnb(std::span<const ListingRecord> listings, const RegionId& region, int month) {
    AirbnbRegionSummary out;
    out.region = region;
    out.month = month;
    out.total_listings = int(listings.size());
    for (const auto& f : listing_categorical_fields()) {
        CategoricalSummary s{f.label, 0, {}};
        for (const auto& l : listings)
            if (const auto& v = f.get(l)) {
                ++s.with_data;
                ++s.counts[*v];
            }
        out.categorical.push_back(std::move(s));
    }
    for (const auto& f : listing_binary_fields()) {
        BinarySummary s{f.label, 0, 0};
        for (const auto& l : listings)
            if (const auto& v = f.get(l)) {
                ++s.with_data;
                s.true_count += *v ? 1 : 0;
            }
        out.binary.push_back(s);
    }
    for (const auto& f : listing_numeric_fields()) {
        std::vector<double> values;
        for (const auto& l : listings)
            if (auto v = f.get(l)) values.push_back(*v);
        out.numeric.push_back(describe(f.label, std::move(values)));
    }
    return out;
}

double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * double(values.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ActiveRegionSelection select_active_regions(const std::map<RegionId, double>& listing_counts) {
    if (listing_counts.size() < 4)
        throw ConfigError(fmt::format("active-region selection needs at least 4 regions, got {}", listing_counts.size()));
    std::vector<double> means;
    for (const auto& [id, mean] : listing_counts) means.push_back(mean);
    ActiveRegionSelection sel;
    sel.threshold = quantile_linear(means, 0.75);
    for (const auto& [id, mean] : listing_counts)
        if (mean > sel.threshold) sel.selected.push_back(id);
    return sel;
}

SplitAssignment assign_splits(int total_months, const SplitSpec& split) {
    if (split.train <= 0 || split.val <= 0 || split.test <= 0)
        throw ConfigError("split sizes must be positive");
    if (split.total() != total_months)
        throw ConfigError(fmt::format("split {}+{}+{}={} does not cover {} months", split.train, split.val,
                                      split.test, split.total(), total_months));
    SplitAssignment a;
    a.train = {0, split.train - 1};
    a.val = {split.train, split.train + split.val - 1};
    a.test = {split.train + split.val, total_months - 1};
    return a;
}

NormStats compute_label_stats(const Panel& panel, const MonthRange& months) {
    NormStats stats;
    for (int t = 0; t < kNumTargets; ++t) {
        double sum = 0.0, lo = HUGE_VAL, hi = -HUGE_VAL;
        int n = 0;
        for (int r = 0; r < panel.num_regions(); ++r)
            for (int m = months.first; m <= months.last; ++m) {
                const double v = std::log1p(panel.labels[panel.cell(r, m)][t]);
                sum += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                ++n;
            }
        if (n == 0) throw ConfigError("label statistics over an empty month range");
        const double mean = sum / n;
        double ss = 0.0;
        for (int r = 0; r < panel.num_regions(); ++r)
            for (int m = months.first; m <= months.last; ++m) {
                double d = std::log1p(panel.labels[panel.cell(r, m)][t]) - mean;
                ss += d * d;
            }
        const double sd = std::sqrt(ss / n);
        stats.label_mean[t] = mean;
        // the mean of identical values can be off by an ulp, so test the range
        stats.label_std[t] = hi > lo && sd > 0.0 ? sd : 1.0;
    }
    return stats;
}

LabelTriple transform_labels(const LabelTriple& raw, const NormStats& stats) {
    LabelTriple out;
    for (int t = 0; t < kNumTargets; ++t) {
        if (!(raw[t] >= 0.0))
            throw std::domain_error(fmt::format("label {} must be non-negative, got {}", kTargetNames[t], raw[t]));
        out[t] = (std::log1p(raw[t]) - stats.label_mean[t]) / stats.label_std[t];
    }
    return out;
}

LabelTriple inverse_transform_labels(const LabelTriple& normalized, const NormStats& stats) {
    LabelTriple out;
    for (int t = 0; t < kNumTargets; ++t)
        out[t] = std::expm1(normalized[t] * stats.label_std[t] + stats.label_mean[t]);
    return out;
}

void column_stats(std::span<const double> table, int rows, int cols, std::vector<double>& mean,
                  std::vector<double>& std) {
    mean.assign(cols, 0.0);
    std.assign(cols, 1.0);
    if (rows == 0) return;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) mean[c] += table[std::size_t(r) * cols + c];
    for (double& m : mean) m /= rows;
    std::vector<double> ss(cols, 0.0);
    std::vector<std::uint8_t> varies(cols, 0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = table[std::size_t(r) * cols + c];
            const double d = v - mean[c];
            ss[c] += d * d;
            varies[c] |= v != table[c];
        }
    for (int c = 0; c < cols; ++c) {
        double sd = std::sqrt(ss[c] / rows);
        std[c] = varies[c] && sd > 0.0 ? sd : 1.0;
    }
}

}  // namespace rentcast::data
