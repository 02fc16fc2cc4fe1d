#include "rentcast/core.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "rentcast/errors.hpp"

namespace rentcast {

RegionId::RegionId(std::string code) : code_(std::move(code)) {
    if (code_.empty()) throw std::invalid_argument("RegionId: empty region code");
}

YearMonth YearMonth::parse(std::string_view text) {
    auto fail = [&] { return std::invalid_argument(fmt::format("unparseable month '{}', expected YYYY-MM", text)); };
    if (text.size() != 7 || text[4] != '-') throw fail();
    YearMonth ym;
    auto r1 = std::from_chars(text.data(), text.data() + 4, ym.year);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, ym.month);
    if (r1.ec != std::errc{} || r1.ptr != text.data() + 4 || r2.ec != std::errc{} ||
        r2.ptr != text.data() + 7 || ym.month < 1 || ym.month > 12)
        throw fail();
    return ym;
}

std::string YearMonth::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

YearMonth YearMonth::plus(int months) const {
    int linear = year * 12 + (month - 1) + months;
    // floor division keeps negative offsets well-defined
    int y = linear >= 0 ? linear / 12 : -((-linear + 11) / 12);
    return YearMonth{y, linear - y * 12 + 1};
}

MonthIndex month_index_from_calendar(YearMonth start, YearMonth month) {
    int diff = (month.year - start.year) * 12 + (month.month - start.month);
    if (diff < 0)
        throw std::out_of_range(fmt::format("month {} precedes dataset start {}", month.str(), start.str()));
    return MonthIndex{diff, month};
}

YearMonth calendar_of(YearMonth start, int index) {
    if (index < 0) throw std::out_of_range("negative month index");
    return start.plus(index);
}

double LabelTriple::operator[](int t) const {
    switch (t) {
        case 0: return reservation_days;
        case 1: return revenue;
        case 2: return num_reservations;
    }
    throw std::out_of_range("LabelTriple index");
}

double& LabelTriple::operator[](int t) {
    switch (t) {
        case 0: return reservation_days;
        case 1: return revenue;
        case 2: return num_reservations;
    }
    throw std::out_of_range("LabelTriple index");
}

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::Accessibility: return "ACCESSIBILITY";
        case Modality::HumanFlow: return "HUMAN_FLOW";
        case Modality::Airbnb: return "AIRBNB";
    }
    return "?";
}

std::string_view display_name(Modality m) {
    switch (m) {
        case Modality::Accessibility: return "Accessibility";
        case Modality::HumanFlow: return "Human Flow";
        case Modality::Airbnb: return "Airbnb";
    }
    return "?";
}

Modality parse_modality(std::string_view text) {
    std::string upper(text);
    for (char& c : upper) c = char(std::toupper(static_cast<unsigned char>(c)));
    for (Modality m : kAllModalities)
        if (upper == to_string(m)) return m;
    throw ConfigError(fmt::format("unknown modality '{}'", text));
}

ModalitySet::ModalitySet(std::initializer_list<Modality> ms) {
    for (Modality m : ms) insert(m);
}

ModalitySet ModalitySet::all() { return {Modality::Accessibility, Modality::HumanFlow, Modality::Airbnb}; }

int ModalitySet::size() const {
    int n = 0;
    for (Modality m : kAllModalities) n += contains(m);
    return n;
}

std::vector<Modality> ModalitySet::members() const {
    std::vector<Modality> out;
    for (Modality m : kAllModalities)
        if (contains(m)) out.push_back(m);
    return out;
}

std::string ModalitySet::str() const {
    std::string out;
    for (Modality m : members()) {
        if (!out.empty()) out += ',';
        out += to_string(m);
    }
    return out;
}

std::string ModalitySet::label() const {
    if (empty()) return "Label history only";
    std::string out;
    for (Modality m : members()) {
        if (!out.empty()) out += " + ";
        out += display_name(m);
    }
    return out;
}

ModalitySet ModalitySet::parse(std::string_view text) {
    ModalitySet set;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string_view item = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) set.insert(parse_modality(item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return set;
}

std::string_view to_string(Architecture a) {
    switch (a) {
        case Architecture::RNN: return "RNN";
        case Architecture::LSTM: return "LSTM";
        case Architecture::Transformer: return "TRANSFORMER";
    }
    return "?";
}

Architecture parse_architecture(std::string_view text) {
    for (Architecture a : {Architecture::RNN, Architecture::LSTM, Architecture::Transformer})
        if (text == to_string(a)) return a;
    throw ConfigError(fmt::format("unknown architecture '{}' (RNN, LSTM, TRANSFORMER)", text));
}

int EmbeddingDims::of(Modality m) const {
    switch (m) {
        case Modality::Accessibility: return accessibility;
        case Modality::HumanFlow: return human_flow;
        case Modality::Airbnb: return airbnb;
    }
    return 0;
}

int EmbeddingDims::total_for(const ModalitySet& active) const {
    int d = label;
    for (Modality m : active.members()) d += of(m);
    return d;
}

std::string EmbeddingDims::str() const {
    return fmt::format("{}/{}/{}/{}", accessibility, human_flow, airbnb, label);
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, std::string_view msg) {
        if (!ok) throw ConfigError(std::string(msg));
    };
    require(window_size >= 1, "window.size must be >= 1");
    require(horizon == kHorizon, "window.horizon must be 3");
    require(stride == 1, "window.stride must be 1");
    require(dims.accessibility > 0 && dims.human_flow > 0 && dims.airbnb > 0 && dims.label > 0,
            "all embedding dims must be > 0");
    require(loss_weights.alpha >= 0 && loss_weights.beta >= 0 && loss_weights.gamma >= 0,
            "loss weights must be >= 0");
    require(loss_weights.alpha + loss_weights.beta + loss_weights.gamma > 0, "loss weights must not all be zero");
    require(std::isfinite(loss_weights.alpha + loss_weights.beta + loss_weights.gamma), "loss weights must be finite");
    require(split.train > 0 && split.val > 0 && split.test > 0, "split sizes must be > 0");
    require(model.hidden > 0 && model.layers > 0 && model.heads > 0 && model.ffn > 0, "model sizes must be > 0");
    require(model.hidden % model.heads == 0, "model.hidden must be divisible by model.heads");
    require(train.learning_rate > 0, "train.learning_rate must be > 0");
    require(train.max_epochs >= 1 && train.patience >= 1, "train.max_epochs and train.patience must be >= 1");
    require(embed.backend == "hash" || embed.backend == "numeric" || embed.backend == "http",
            "embed.backend must be hash, numeric or http");
    require(embed.max_in_flight >= 1 && embed.workers >= 1, "embed.max_in_flight and embed.workers must be >= 1");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

}  // namespace rentcast
