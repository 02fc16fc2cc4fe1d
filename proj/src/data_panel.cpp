#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "rentcast/csv.hpp"
#include "rentcast/data.hpp"
#include "rentcast/errors.hpp"

namespace rentcast::data {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Maps every header column of `table` to its canonical name.
std::vector<std::string> resolve_columns(const csv::Table& table, const std::map<std::string, std::string>& mapping,
                                         const std::vector<std::string>& allowed,
                                         const std::vector<std::string>& required) {
    std::map<std::string, std::string> source_to_canonical;
    for (const auto& [canonical, source] : mapping) {
        if (std::find(allowed.begin(), allowed.end(), canonical) == allowed.end())
            throw IngestError(fmt::format("{}: schema maps unknown variable '{}'", table.name, canonical));
        if (std::find(table.header.begin(), table.header.end(), source) == table.header.end())
            throw IngestError(fmt::format("{}: mapped column '{}' (for '{}') not found", table.name, source, canonical));
        source_to_canonical[source] = canonical;
    }
    std::vector<std::string> resolved;
    std::set<std::string> seen;
    for (const auto& h : table.header) {
        std::string canonical;
        if (auto it = source_to_canonical.find(h); it != source_to_canonical.end())
            canonical = it->second;
        else if (std::find(allowed.begin(), allowed.end(), h) != allowed.end() && !mapping.contains(h))
            canonical = h;
        else
            throw IngestError(fmt::format("{}: unknown column '{}'", table.name, h));
        if (!seen.insert(canonical).second)
            throw IngestError(fmt::format("{}: column '{}' appears twice", table.name, canonical));
        resolved.push_back(canonical);
    }
    for (const auto& r : required)
        if (!seen.contains(r)) throw IngestError(fmt::format("{}: missing column '{}'", table.name, r));
    return resolved;
}

struct RowReader {
    const csv::Table& table;
    std::size_t row;
    const std::vector<std::string>& columns;

    std::string where() const { return fmt::format("{}:{}", table.name, table.lines[row]); }

    const std::string* field(const std::string& canonical) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == canonical) return &table.rows[row][i];
        return nullptr;
    }

    std::string text(const std::string& canonical) const {
        const std::string* f = field(canonical);
        if (!f || f->empty()) throw IngestError(fmt::format("{}: empty '{}'", where(), canonical));
        return *f;
    }

    YearMonth month() const {
        try {
            return YearMonth::parse(text("month"));
        } catch (const std::invalid_argument& e) {
            throw IngestError(fmt::format("{}: {}", where(), e.what()));
        }
    }

    std::optional<double> number(const std::string& canonical) const {
        const std::string* f = field(canonical);
        if (!f || f->empty()) return std::nullopt;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(*f, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != f->size() || !std::isfinite(v))
            throw IngestError(fmt::format("{}: '{}' is not a finite number: '{}'", where(), canonical, *f));
        return v;
    }

    double required_nonneg(const std::string& canonical) const {
        auto v = number(canonical);
        if (!v) throw IngestError(fmt::format("{}: empty '{}'", where(), canonical));
        if (*v < 0) throw IngestError(fmt::format("{}: '{}' is negative", where(), canonical));
        return *v;
    }

    std::optional<bool> boolean(const std::string& canonical) const {
        const std::string* f = field(canonical);
        if (!f || f->empty()) return std::nullopt;
        std::string s = lower(*f);
        if (s == "true" || s == "t" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "f" || s == "0" || s == "no") return false;
        throw IngestError(fmt::format("{}: '{}' is not a boolean: '{}'", where(), canonical, *f));
    }

    std::optional<std::string> category(const std::string& canonical) const {
        const std::string* f = field(canonical);
        if (!f || f->empty()) return std::nullopt;
        return *f;
    }
};

struct PendingListing {
    ListingRecord record;
    YearMonth month;
};

struct PendingVariables {
    RegionId region;
    YearMonth month;
    std::map<std::string, double> values;
    std::string where;
};

std::vector<std::string> with_keys(std::vector<std::string> keys, const std::vector<NumericVariable>& vars) {
    for (const auto& v : vars) keys.push_back(v.column);
    return keys;
}

std::vector<PendingVariables> read_variables(const std::filesystem::path& path,
                                             const std::map<std::string, std::string>& mapping,
                                             const std::vector<NumericVariable>& vars) {
    csv::Table t = csv::read(path);
    auto allowed = with_keys({"region", "month"}, vars);
    auto cols = resolve_columns(t, mapping, allowed, allowed);
    std::vector<PendingVariables> out;
    std::set<std::pair<std::string, YearMonth>> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        RowReader rr{t, i, cols};
        PendingVariables p;
        p.region = RegionId(rr.text("region"));
        p.month = rr.month();
        p.where = rr.where();
        if (!seen.insert({p.region.code(), p.month}).second)
            throw IngestError(fmt::format("{}: duplicate row for region {} month {}", rr.where(), p.region.code(),
                                          p.month.str()));
        for (const auto& v : vars) p.values[v.column] = rr.required_nonneg(v.column);
        out.push_back(std::move(p));
    }
    return out;
}

VariableRecord zero_record(const RegionId& region, int month, const std::vector<NumericVariable>& vars) {
    VariableRecord r{region, month, {}};
    for (const auto& v : vars) r.values[v.column] = 0.0;
    return r;
}

}  // namespace

SchemaMapping SchemaMapping::load(const std::filesystem::path& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw IngestError(fmt::format("schema mapping {}: {}", path.string(), e.what()));
    }
    SchemaMapping m;
    for (const auto& [section, child] : tree) {
        std::map<std::string, std::string>* target = nullptr;
        if (section == "listings") target = &m.listings;
        else if (section == "accessibility") target = &m.accessibility;
        else if (section == "human_flow") target = &m.human_flow;
        else if (section == "labels") target = &m.labels;
        else throw IngestError(fmt::format("schema mapping {}: unknown section '{}'", path.string(), section));
        for (const auto& [key, value] : child) (*target)[key] = value.data();
    }
    return m;
}

PanelPaths PanelPaths::in_directory(const std::filesystem::path& dir) {
    return {dir / "listings.csv", dir / "accessibility.csv", dir / "human_flow.csv", dir / "labels.csv"};
}

int Panel::region_index(const RegionId& id) const {
    auto it = std::lower_bound(regions.begin(), regions.end(), id);
    if (it == regions.end() || *it != id) return -1;
    return int(it - regions.begin());
}

Panel Panel::subset(const std::vector<RegionId>& keep) const {
    std::set<RegionId> wanted(keep.begin(), keep.end());
    Panel out;
    out.start = start;
    out.months = months;
    for (int r = 0; r < num_regions(); ++r) {
        if (!wanted.contains(regions[r])) continue;
        out.regions.push_back(regions[r]);
        for (int m = 0; m < months; ++m) {
            int c = cell(r, m);
            out.listings.push_back(listings[c]);
            out.accessibility.push_back(accessibility[c]);
            out.human_flow.push_back(human_flow[c]);
            out.labels.push_back(labels[c]);
            out.accessibility_missing.push_back(accessibility_missing[c]);
            out.human_flow_missing.push_back(human_flow_missing[c]);
            out.labels_missing.push_back(labels_missing[c]);
        }
    }
    if (out.regions.size() != wanted.size()) throw ConfigError("subset: requested region not in panel");
    return out;
}

std::map<RegionId, double> Panel::mean_listing_counts() const {
    std::map<RegionId, double> out;
    for (int r = 0; r < num_regions(); ++r) {
        double total = 0.0;
        for (int m = 0; m < months; ++m) total += double(listings[cell(r, m)].size());
        out[regions[r]] = months > 0 ? total / months : 0.0;
    }
    return out;
}

Panel load_panel(const PanelPaths& paths, const SchemaMapping& schema) {
    // listings
    csv::Table lt = csv::read(paths.listings);
    auto lcols = resolve_columns(lt, schema.listings, listing_columns(), {"listing_id", "region", "month"});
    std::vector<PendingListing> listings;
    std::set<std::tuple<std::string, YearMonth, std::string>> seen;
    for (std::size_t i = 0; i < lt.rows.size(); ++i) {
        RowReader rr{lt, i, lcols};
        PendingListing p;
        p.record.listing_id = rr.text("listing_id");
        p.record.region = RegionId(rr.text("region"));
        p.month = rr.month();
        if (!seen.insert({p.record.region.code(), p.month, p.record.listing_id}).second)
            throw IngestError(fmt::format("{}: duplicate listing '{}' for region {} month {}", rr.where(),
                                          p.record.listing_id, p.record.region.code(), p.month.str()));
        for (const auto& f : listing_categorical_fields()) f.set(p.record) = rr.category(f.column);
        for (const auto& f : listing_binary_fields()) f.set(p.record) = rr.boolean(f.column);
        for (const auto& f : listing_numeric_fields()) {
            auto v = rr.number(f.column);
            if (v && (f.column == "available_days" || f.column == "blocked_days") &&
                (*v < 0 || *v != std::floor(*v)))
                throw IngestError(fmt::format("{}: '{}' must be a non-negative integer", rr.where(), f.column));
            f.set(p.record, v);
        }
        const auto& op = p.record.operational;
        if (op.available_days.value_or(0) + op.blocked_days.value_or(0) > 31)
            throw IngestError(fmt::format("{}: available_days + blocked_days exceeds 31", rr.where()));
        listings.push_back(std::move(p));
    }

    auto access = read_variables(paths.accessibility, schema.accessibility, accessibility_variables());
    auto flow = read_variables(paths.human_flow, schema.human_flow, human_flow_variables());

    csv::Table bt = csv::read(paths.labels);
    std::vector<std::string> label_cols = {"region", "month", "reservation_days", "revenue", "num_reservations"};
    auto bcols = resolve_columns(bt, schema.labels, label_cols, label_cols);
    struct PendingLabel {
        RegionId region;
        YearMonth month;
        LabelTriple labels;
    };
    std::vector<PendingLabel> labels;
    std::set<std::pair<std::string, YearMonth>> seen_labels;
    for (std::size_t i = 0; i < bt.rows.size(); ++i) {
        RowReader rr{bt, i, bcols};
        PendingLabel p{RegionId(rr.text("region")), rr.month(), {}};
        if (!seen_labels.insert({p.region.code(), p.month}).second)
            throw IngestError(fmt::format("{}: duplicate label row for region {} month {}", rr.where(),
                                          p.region.code(), p.month.str()));
        for (int t = 0; t < kNumTargets; ++t) p.labels[t] = rr.required_nonneg(std::string(kTargetNames[t]));
        labels.push_back(p);
    }

    // grid extent
    std::set<RegionId> regions;
    std::optional<YearMonth> first, last;
    auto see = [&](const RegionId& r, YearMonth m) {
        regions.insert(r);
        if (!first || m < *first) first = m;
        if (!last || *last < m) last = m;
    };
    for (const auto& p : listings) see(p.record.region, p.month);
    for (const auto& p : access) see(p.region, p.month);
    for (const auto& p : flow) see(p.region, p.month);
    for (const auto& p : labels) see(p.region, p.month);
    if (!first) throw IngestError("panel: all tables are empty");

    Panel panel;
    panel.start = *first;
    panel.months = month_index_from_calendar(*first, *last).index + 1;
    panel.regions.assign(regions.begin(), regions.end());
    const std::size_t cells = panel.regions.size() * std::size_t(panel.months);
    panel.listings.resize(cells);
    panel.labels.resize(cells);
    panel.accessibility_missing.assign(cells, 1);
    panel.human_flow_missing.assign(cells, 1);
    panel.labels_missing.assign(cells, 1);
    for (int r = 0; r < panel.num_regions(); ++r)
        for (int m = 0; m < panel.months; ++m) {
            panel.accessibility.push_back(zero_record(panel.regions[r], m, accessibility_variables()));
            panel.human_flow.push_back(zero_record(panel.regions[r], m, human_flow_variables()));
        }

    auto cell_of = [&](const RegionId& r, YearMonth m) {
        return panel.cell(panel.region_index(r), month_index_from_calendar(panel.start, m).index);
    };
    for (auto& p : listings) {
        int c = cell_of(p.record.region, p.month);
        p.record.month = c % panel.months;
        panel.listings[c].push_back(std::move(p.record));
    }
    for (auto& p : access) {
        int c = cell_of(p.region, p.month);
        panel.accessibility[c].values = std::move(p.values);
        panel.accessibility_missing[c] = 0;
    }
    for (auto& p : flow) {
        int c = cell_of(p.region, p.month);
        panel.human_flow[c].values = std::move(p.values);
        panel.human_flow_missing[c] = 0;
    }
    for (auto& p : labels) {
        int c = cell_of(p.region, p.month);
        panel.labels[c] = p.labels;
        panel.labels_missing[c] = 0;
    }
    for (auto& cell : panel.listings)
        std::sort(cell.begin(), cell.end(),
                  [](const ListingRecord& a, const ListingRecord& b) { return a.listing_id < b.listing_id; });
    return panel;
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }

template <typename T>
std::string opt(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, bool>)
        return *v ? "true" : "false";
    else if constexpr (std::is_same_v<T, std::string>)
        return *v;
    else
        return num(double(*v));
}

void write_variables(const Panel& panel, const std::vector<VariableRecord>& recs,
                     const std::vector<std::uint8_t>& missing, const std::vector<NumericVariable>& vars,
                     const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IngestError(fmt::format("cannot write {}", path.string()));
    std::vector<std::string> header = {"region", "month"};
    for (const auto& v : vars) header.push_back(v.column);
    csv::write_row(os, header);
    for (int r = 0; r < panel.num_regions(); ++r)
        for (int m = 0; m < panel.months; ++m) {
            int c = panel.cell(r, m);
            if (missing[c]) continue;
            std::vector<std::string> row = {panel.regions[r].code(), calendar_of(panel.start, m).str()};
            for (const auto& v : vars) row.push_back(num(recs[c].at(v.column)));
            csv::write_row(os, row);
        }
}

}  // namespace

void write_panel(const Panel& panel, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "listings.csv", std::ios::binary);
        if (!os) throw IngestError(fmt::format("cannot write {}", (dir / "listings.csv").string()));
        csv::write_row(os, listing_columns());
        for (int r = 0; r < panel.num_regions(); ++r)
            for (int m = 0; m < panel.months; ++m)
                for (const auto& l : panel.listings[panel.cell(r, m)]) {
                    std::vector<std::string> row = {
                        l.listing_id,
                        l.region.code(),
                        calendar_of(panel.start, m).str(),
                        opt(l.operational.available_days),
                        opt(l.operational.blocked_days),
                        opt(l.accommodation.property_type),
                        opt(l.accommodation.listing_type),
                        opt(l.accommodation.bedrooms),
                        opt(l.accommodation.bathrooms),
                        opt(l.accommodation.max_guests),
                        opt(l.host.response_rate),
                        opt(l.host.response_time),
                        opt(l.host.superhost),
                        opt(l.policy.cancellation_policy),
                        opt(l.checkin.checkin_time),
                        opt(l.checkin.checkout_time),
                        opt(l.checkin.minimum_stay),
                        opt(l.other.num_photos),
                        opt(l.other.instantbook),
                        opt(l.other.pets_allowed),
                        opt(l.other.property_manager),
                        opt(l.response.overall_rating),
                        opt(l.response.num_reviews),
                    };
                    csv::write_row(os, row);
                }
    }
    write_variables(panel, panel.accessibility, panel.accessibility_missing, accessibility_variables(),
                    dir / "accessibility.csv");
    write_variables(panel, panel.human_flow, panel.human_flow_missing, human_flow_variables(),
                    dir / "human_flow.csv");
    std::ofstream os(dir / "labels.csv", std::ios::binary);
    if (!os) throw IngestError(fmt::format("cannot write {}", (dir / "labels.csv").string()));
    csv::write_row(os, {"region", "month", "reservation_days", "revenue", "num_reservations"});
    for (int r = 0; r < panel.num_regions(); ++r)
        for (int m = 0; m < panel.months; ++m) {
            int c = panel.cell(r, m);
            if (panel.labels_missing[c]) continue;
            const auto& y = panel.labels[c];
            csv::write_row(os, {panel.regions[r].code(), calendar_of(panel.start, m).str(), num(y.reservation_days),
                                num(y.revenue), num(y.num_reservations)});
        }
}

}  // namespace rentcast::data
