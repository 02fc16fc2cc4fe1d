#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "rentcast/csv.hpp"
#include "rentcast/data.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/random.hpp"

namespace rentcast::data {

namespace {

constexpr double kMissingRate = 0.04;

const std::vector<std::string> kPropertyTypes = {"Apartment", "House", "Officetel", "Guesthouse", "Villa"};
const std::vector<std::string> kListingTypes = {"Entire home/apt", "Private room", "Shared room"};
const std::vector<std::string> kResponseTimes = {"within an hour", "within a few hours", "within a day",
                                                 "a few days or more"};
const std::vector<std::string> kCancellation = {"Flexible", "Moderate", "Strict", "Super Strict"};
const std::vector<std::string> kCheckin = {"14:00", "15:00", "16:00", "Flexible"};
const std::vector<std::string> kCheckout = {"10:00", "11:00", "12:00"};

struct ListingProfile {
    std::string id;
    std::string property_type, listing_type, response_time, cancellation, checkin, checkout;
    double bedrooms, bathrooms, max_guests, response_rate, minimum_stay, num_photos, rating, reviews;
    bool superhost, instantbook, pets, manager;
};

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
    return items[rng.below(items.size())];
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

ListingProfile make_profile(const std::string& id, Rng& rng) {
    ListingProfile p;
    p.id = id;
    p.property_type = pick(kPropertyTypes, rng);
    p.listing_type = pick(kListingTypes, rng);
    p.response_time = pick(kResponseTimes, rng);
    p.cancellation = pick(kCancellation, rng);
    p.checkin = pick(kCheckin, rng);
    p.checkout = pick(kCheckout, rng);
    p.bedrooms = double(1 + rng.below(4));
    p.bathrooms = double(1 + rng.below(2));
    p.max_guests = p.bedrooms * 2 + double(rng.below(3));
    p.response_rate = std::round(rng.uniform(60.0, 100.0));
    p.minimum_stay = double(1 + rng.below(5));
    p.num_photos = double(5 + rng.below(40));
    p.rating = round2(rng.uniform(3.5, 5.0));
    p.reviews = double(rng.below(200));
    p.superhost = rng.uniform() < 0.3;
    p.instantbook = rng.uniform() < 0.5;
    p.pets = rng.uniform() < 0.2;
    p.manager = rng.uniform() < 0.15;
    return p;
}

template <typename T>
std::optional<T> maybe(T v, Rng& rng) {
    if (rng.uniform() < kMissingRate) return std::nullopt;
    return v;
}

}  // namespace

double synthetic_log_label(const RegionTruth& truth, const SignalSpec& signal, int target, int month) {
    const double seasonal =
        signal.seasonal_amplitude * std::sin(2.0 * std::numbers::pi * (double(month) + truth.phase) / 12.0);
    const double driver = truth.driver.empty() ? 0.0 : truth.driver[std::size_t(month)];
    return kSyntheticTargetOffsets[std::size_t(target)] + truth.level + truth.slope * double(month) / 12.0 + seasonal +
           signal.flow_effect * driver;
}

SyntheticDataset synthesize(const SyntheticSpec& spec) {
    if (spec.regions < 4) throw ConfigError(fmt::format("synthetic data needs >= 4 regions, got {}", spec.regions));
    const int min_months = spec.min_window + kHorizon + 3;
    if (spec.months < min_months)
        throw ConfigError(fmt::format("synthetic data needs >= {} months, got {}", min_months, spec.months));
    const SignalSpec& sig = spec.signal;
    if (sig.flow_lag < 0) throw ConfigError("flow_lag must be >= 0");

    Rng rng(spec.seed);
    SyntheticDataset ds;
    Panel& panel = ds.panel;
    panel.start = spec.start;
    panel.months = spec.months;
    const int width = int(std::log10(spec.regions)) + 1;
    for (int r = 0; r < spec.regions; ++r) panel.regions.emplace_back(fmt::format("D{:0{}d}", r + 1, width));

    const std::size_t cells = std::size_t(spec.regions) * spec.months;
    panel.listings.resize(cells);
    panel.labels.resize(cells);
    panel.accessibility_missing.assign(cells, 0);
    panel.human_flow_missing.assign(cells, 0);
    panel.labels_missing.assign(cells, 0);

    const double phi = sig.flow_persistence;
    const double innovation = std::sqrt(std::max(0.0, 1.0 - phi * phi));
    for (int r = 0; r < spec.regions; ++r) {
        Rng rr(derive_seed(spec.seed, 1000 + r));
        RegionTruth truth;
        truth.region = panel.regions[r];
        truth.mean_listings = std::exp(2.7 + 0.6 * rr.normal());
        truth.level = 0.6 * std::log(truth.mean_listings / 15.0) + sig.level_spread * 0.6 * rr.normal();
        truth.slope = sig.slope_spread * rr.normal();
        truth.phase = rr.uniform(0.0, 12.0);

        // driver indexed by (month + lag); months -lag..months-1
        std::vector<double> driver;
        double d = rr.normal();
        for (int m = -sig.flow_lag; m < spec.months; ++m) {
            driver.push_back(d);
            d = phi * d + innovation * rr.normal();
        }
        // label month m reads driver at (m - lag), i.e. driver[m]
        truth.driver = driver;
        std::vector<double> flow_driver(driver.begin() + sig.flow_lag, driver.end());

        // static accessibility profile
        const double roads = double(40 + rr.below(160));
        const double length = round2(roads * rr.uniform(90.0, 200.0));
        std::map<std::string, double> access_base = {
            {"road_nodes_near_listings", double(20 + rr.below(300))},
            {"total_roads", roads},
            {"total_road_length", length},
            {"tunnels", double(rr.below(4))},
            {"bridges", double(rr.below(6))},
            {"roads_motorway", double(rr.below(3))},
            {"roads_trunk", double(rr.below(6))},
            {"roads_primary", double(2 + rr.below(12))},
            {"roads_secondary", double(3 + rr.below(15))},
            {"roads_tertiary", double(5 + rr.below(25))},
            {"roads_residential", std::floor(roads * 0.5)},
        };
        const double bus = rr.uniform(20000, 200000);
        const double subway = rr.uniform(0, 300000);
        const double population = rr.uniform(8000, 40000);
        const double foreign_long = rr.uniform(50, 1500);
        const double foreign_short = rr.uniform(900, 1100);

        std::vector<ListingProfile> pool;
        const int pool_size = int(truth.mean_listings * 1.6) + 2;
        for (int k = 0; k < pool_size; ++k)
            pool.push_back(make_profile(fmt::format("{}-L{:04d}", truth.region.code(), k + 1), rr));

        for (int m = 0; m < spec.months; ++m) {
            const int c = panel.cell(r, m);
            const double season = std::sin(2.0 * std::numbers::pi * (double(m) + truth.phase) / 12.0);

            VariableRecord acc{truth.region, m, access_base};
            acc.values["bus_boarding"] = round2(bus * (1.0 + 0.05 * season + 0.02 * rr.normal()));
            acc.values["bus_alighting"] = round2(bus * (0.97 + 0.05 * season + 0.02 * rr.normal()));
            acc.values["subway_boarding"] = round2(subway * (1.0 + 0.04 * season + 0.02 * rr.normal()));
            acc.values["subway_alighting"] = round2(subway * (0.98 + 0.04 * season + 0.02 * rr.normal()));
            for (auto& [k, v] : acc.values) v = std::max(0.0, v);
            panel.accessibility.push_back(std::move(acc));

            const double dm = flow_driver[std::size_t(m)];
            VariableRecord hf{truth.region, m, {}};
            double total = 0.0;
            for (const auto& band : age_bands()) {
                const bool young = band == "20s" || band == "30s";
                const double effect = young ? std::exp(dm) : std::exp(0.02 * rr.normal());
                const double share = population / double(2 * age_bands().size());
                const double male = round2(share * effect * rr.uniform(0.9, 1.1));
                const double female = round2(share * effect * rr.uniform(0.9, 1.1));
                hf.values[fmt::format("domestic_{}_male", band)] = male;
                hf.values[fmt::format("domestic_{}_female", band)] = female;
                total += male + female;
            }
            hf.values["total_domestic"] = round2(total);
            hf.values["foreign_long_term"] = round2(foreign_long * std::exp(0.03 * rr.normal()));
            hf.values["foreign_short_term"] = round2(foreign_short * std::exp(2.0 * dm));
            panel.human_flow.push_back(std::move(hf));

            for (int t = 0; t < kNumTargets; ++t) {
                double log_y = synthetic_log_label(truth, sig, t, m) + sig.noise * rr.normal();
                panel.labels[c][t] = std::exp(log_y);
            }

            const int count = std::max(0, int(std::lround(truth.mean_listings * (1.0 + 0.1 * rr.normal()))));
            for (int k = 0; k < std::min(count, pool_size); ++k) {
                const ListingProfile& p = pool[std::size_t(k)];
                ListingRecord l;
                l.listing_id = p.id;
                l.region = truth.region;
                l.month = m;
                const int available = int(rr.below(32));
                l.operational.available_days = maybe(available, rr);
                l.operational.blocked_days = maybe(int(rr.below(std::uint64_t(32 - available))), rr);
                l.accommodation.property_type = maybe(p.property_type, rr);
                l.accommodation.listing_type = maybe(p.listing_type, rr);
                l.accommodation.bedrooms = maybe(p.bedrooms, rr);
                l.accommodation.bathrooms = maybe(p.bathrooms, rr);
                l.accommodation.max_guests = maybe(p.max_guests, rr);
                l.host.response_rate = maybe(p.response_rate, rr);
                l.host.response_time = maybe(p.response_time, rr);
                l.host.superhost = maybe(p.superhost, rr);
                l.policy.cancellation_policy = maybe(p.cancellation, rr);
                l.checkin.checkin_time = maybe(p.checkin, rr);
                l.checkin.checkout_time = maybe(p.checkout, rr);
                l.checkin.minimum_stay = maybe(p.minimum_stay, rr);
                l.other.num_photos = maybe(p.num_photos, rr);
                l.other.instantbook = maybe(p.instantbook, rr);
                l.other.pets_allowed = maybe(p.pets, rr);
                l.other.property_manager = maybe(p.manager, rr);
                l.response.overall_rating = maybe(p.rating, rr);
                l.response.num_reviews = maybe(p.reviews + double(m), rr);
                panel.listings[std::size_t(c)].push_back(std::move(l));
            }
        }
        ds.truth.push_back(std::move(truth));
    }
    return ds;
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir, bool write_truth) {
    SyntheticDataset ds = synthesize(spec);
    write_panel(ds.panel, dir);
    if (!write_truth) return ds;
    std::ofstream os(dir / "truth.csv", std::ios::binary);
    if (!os) throw IngestError(fmt::format("cannot write {}", (dir / "truth.csv").string()));
    csv::write_row(os, {"region", "level", "slope", "phase", "mean_listings"});
    for (const auto& t : ds.truth)
        csv::write_row(os, {t.region.code(), fmt::format("{}", t.level), fmt::format("{}", t.slope),
                            fmt::format("{}", t.phase), fmt::format("{}", t.mean_listings)});
    return ds;
}

}  // namespace rentcast::data
