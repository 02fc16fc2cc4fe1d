#include <fmt/format.h>

#include "rentcast/data.hpp"

namespace rentcast::data {

double VariableRecord::at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end())
        throw std::out_of_range(fmt::format("region {} month {}: no variable '{}'", region.code(), month, name));
    return it->second;
}

const std::vector<std::string>& age_bands() {
    static const std::vector<std::string> bands = {"10s", "20s", "30s", "40s", "50s", "60s", "70s"};
    return bands;
}

const std::vector<NumericVariable>& accessibility_variables() {
    static const std::vector<NumericVariable> vars = {
        {"road_nodes_near_listings", "Road nodes near AirBnBs", true},
        {"total_roads", "Total number of roads in the dong", true},
        {"total_road_length", "Total length", false},
        {"tunnels", "Tunnels", true},
        {"bridges", "Bridges", true},
        {"roads_motorway", "Motorway", true},
        {"roads_trunk", "Trunk", true},
        {"roads_primary", "Primary", true},
        {"roads_secondary", "Secondary", true},
        {"roads_tertiary", "Tertiary", true},
        {"roads_residential", "Residential", true},
        {"bus_boarding", "Bus Boarding", false},
        {"bus_alighting", "Bus Alighting", false},
        {"subway_boarding", "Subway Boarding", false},
        {"subway_alighting", "Subway Alighting", false},
    };
    return vars;
}

const std::vector<NumericVariable>& human_flow_variables() {
    static const std::vector<NumericVariable> vars = [] {
        std::vector<NumericVariable> v;
        v.push_back({"total_domestic", "Total Domestic Floating Population", false});
        for (const auto& band : age_bands()) {
            v.push_back({fmt::format("domestic_{}_male", band), fmt::format("{} Male", band), false});
            v.push_back({fmt::format("domestic_{}_female", band), "Female", false});
        }
        v.push_back({"foreign_long_term", "Long-Term Foreign Residents", false});
        v.push_back({"foreign_short_term", "Short-Term Foreign Visitors", false});
        return v;
    }();
    return vars;
}

#define RC_CAT(col, label, group, field)                                                    \
    CategoricalField {                                                                      \
        col, label, [](const ListingRecord& r) -> const std::optional<std::string>& {      \
            return r.group.field;                                                           \
        },                                                                                  \
            [](ListingRecord& r) -> std::optional<std::string>& { return r.group.field; } \
    }
#define RC_BIN(col, label, group, field)                                                                      \
    BinaryField {                                                                                             \
        col, label, [](const ListingRecord& r) -> const std::optional<bool>& { return r.group.field; },      \
            [](ListingRecord& r) -> std::optional<bool>& { return r.group.field; }                           \
    }
#define RC_NUM(col, label, group, field)                                                            \
    NumericField {                                                                                  \
        col, label, [](const ListingRecord& r) -> std::optional<double> { return r.group.field; }, \
            [](ListingRecord& r, std::optional<double> v) { r.group.field = v; }                   \
    }

const std::vector<CategoricalField>& listing_categorical_fields() {
    static const std::vector<CategoricalField> fields = {
        RC_CAT("property_type", "Property Type", accommodation, property_type),
        RC_CAT("listing_type", "Listing Type", accommodation, listing_type),
        RC_CAT("response_time", "Airbnb Response Time", host, response_time),
        RC_CAT("cancellation_policy", "Cancellation Policy", policy, cancellation_policy),
        RC_CAT("checkin_time", "Check-in Time", checkin, checkin_time),
        RC_CAT("checkout_time", "Checkout Time", checkin, checkout_time),
    };
    return fields;
}

const std::vector<BinaryField>& listing_binary_fields() {
    static const std::vector<BinaryField> fields = {
        RC_BIN("superhost", "Airbnb Superhost", host, superhost),
        RC_BIN("instantbook", "Instantbook Enabled", other, instantbook),
        RC_BIN("pets_allowed", "Pets Allowed", other, pets_allowed),
        RC_BIN("property_manager", "Integrated Property Manager", other, property_manager),
    };
    return fields;
}

const std::vector<NumericField>& listing_numeric_fields() {
    static const std::vector<NumericField> fields = {
        NumericField{"available_days", "Available Days",
                     [](const ListingRecord& r) -> std::optional<double> {
                         if (!r.operational.available_days) return std::nullopt;
                         return double(*r.operational.available_days);
                     },
                     [](ListingRecord& r, std::optional<double> v) {
                         r.operational.available_days = v ? std::optional<int>(int(*v)) : std::nullopt;
                     }},
        NumericField{"blocked_days", "Blocked Days",
                     [](const ListingRecord& r) -> std::optional<double> {
                         if (!r.operational.blocked_days) return std::nullopt;
                         return double(*r.operational.blocked_days);
                     },
                     [](ListingRecord& r, std::optional<double> v) {
                         r.operational.blocked_days = v ? std::optional<int>(int(*v)) : std::nullopt;
                     }},
        RC_NUM("bedrooms", "Bedrooms", accommodation, bedrooms),
        RC_NUM("bathrooms", "Bathrooms", accommodation, bathrooms),
        RC_NUM("max_guests", "Max Guests", accommodation, max_guests),
        RC_NUM("response_rate", "Response Rate", host, response_rate),
        RC_NUM("minimum_stay", "Minimum Stay", checkin, minimum_stay),
        RC_NUM("num_photos", "Number of Photos", other, num_photos),
        RC_NUM("overall_rating", "Overall Rating", response, overall_rating),
        RC_NUM("num_reviews", "Number of Reviews", response, num_reviews),
    };
    return fields;
}

#undef RC_CAT
#undef RC_BIN
#undef RC_NUM

std::vector<std::string> listing_columns() {
    return {"listing_id",     "region",         "month",        "available_days",      "blocked_days",
            "property_type",  "listing_type",   "bedrooms",     "bathrooms",           "max_guests",
            "response_rate",  "response_time",  "superhost",    "cancellation_policy", "checkin_time",
            "checkout_time",  "minimum_stay",   "num_photos",   "instantbook",         "pets_allowed",
            "property_manager", "overall_rating", "num_reviews"};
}

}  // namespace rentcast::data
