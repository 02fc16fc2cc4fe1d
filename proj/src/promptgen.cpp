#include "rentcast/promptgen.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "rentcast/errors.hpp"

namespace rentcast::promptgen {

namespace {

// One output line: optional lead-in text, then "Label: value" pairs joined by ", ".
struct LineSpec {
    std::string lead;
    std::vector<std::string> columns;
};

const std::vector<LineSpec>& accessibility_lines() {
    static const std::vector<LineSpec> lines = {
        {"", {"road_nodes_near_listings"}},
        {"", {"total_roads", "total_road_length"}},
        {"", {"tunnels", "bridges"}},
        {"Roads by Type ",
         {"roads_motorway", "roads_trunk", "roads_primary", "roads_secondary", "roads_tertiary", "roads_residential"}},
        {"Public Transit ", {"bus_boarding", "bus_alighting", "subway_boarding", "subway_alighting"}},
    };
    return lines;
}

const std::vector<LineSpec>& human_flow_lines() {
    static const std::vector<LineSpec> lines = [] {
        std::vector<LineSpec> v;
        v.push_back({"", {"total_domestic"}});
        for (const auto& band : data::age_bands())
            v.push_back({"Domestic Floating Population by Age and Gender ",
                         {fmt::format("domestic_{}_male", band), fmt::format("domestic_{}_female", band)}});
        v.push_back({"", {"foreign_long_term"}});
        v.push_back({"", {"foreign_short_term"}});
        return v;
    }();
    return lines;
}

const data::NumericVariable& lookup(const std::vector<data::NumericVariable>& vars, const std::string& column) {
    for (const auto& v : vars)
        if (v.column == column) return v;
    throw std::logic_error("prompt layout references unknown variable " + column);
}

std::string header(YearMonth start, const data::VariableRecord& r, std::string_view title) {
    return fmt::format("[{} | {}] {}:\n", calendar_of(start, r.month).str(), r.region.code(), title);
}

std::string render_lines(const data::VariableRecord& record, const std::vector<LineSpec>& layout,
                         const std::vector<data::NumericVariable>& vars) {
    std::string out;
    for (const auto& line : layout) {
        out += line.lead;
        for (std::size_t i = 0; i < line.columns.size(); ++i) {
            const auto& var = lookup(vars, line.columns[i]);
            if (i) out += ", ";
            out += fmt::format("{}: {}", var.label, format_value(record.at(var.column), var.integer));
        }
        out += '\n';
    }
    return out;
}

MonthIndex month_of(YearMonth start, int month) { return MonthIndex{month, calendar_of(start, month)}; }

const std::string kSeparator(59, '-');

}  // namespace

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::Accessibility: return "accessibility";
        case PromptKind::HumanFlow: return "human_flow";
        case PromptKind::Airbnb: return "airbnb";
    }
    return "?";
}

PromptKind kind_of(Modality m) {
    switch (m) {
        case Modality::Accessibility: return PromptKind::Accessibility;
        case Modality::HumanFlow: return PromptKind::HumanFlow;
        case Modality::Airbnb: return PromptKind::Airbnb;
    }
    throw std::invalid_argument("unknown modality");
}

std::string format_value(double v, bool integer_kind) {
    if (integer_kind && std::nearbyint(v) == v && std::abs(v) < 1e15) return fmt::format("{}", (long long)v);
    std::string s = fmt::format("{:.2f}", v);
    if (s == "-0.00") s = "0.00";
    return s;
}

Prompt render_accessibility(const data::AccessibilityRecord& record, YearMonth start) {
    Prompt p{PromptKind::Accessibility, record.region, month_of(start, record.month), {}};
    p.text = header(start, record, "Accessibility Summary") +
             render_lines(record, accessibility_lines(), data::accessibility_variables());
    return p;
}

Prompt render_human_flow(const data::HumanFlowRecord& record, YearMonth start) {
    Prompt p{PromptKind::HumanFlow, record.region, month_of(start, record.month), {}};
    p.text = header(start, record, "Human Flow Summary") +
             render_lines(record, human_flow_lines(), data::human_flow_variables());
    return p;
}

Prompt render_airbnb(const data::AirbnbRegionSummary& s, YearMonth start) {
    Prompt p{PromptKind::Airbnb, s.region, month_of(start, s.month), {}};
    std::string& out = p.text;
    out += fmt::format("[{} | {}] Airbnb Feature Summary:\n", calendar_of(start, s.month).str(), s.region.code());
    out += fmt::format("Total number of AirBnBs: {}\n\n", s.total_listings);

    out += "Category Column Attributes:\n";
    for (const auto& c : s.categorical) {
        out += fmt::format("Category: {} Information: Total number with data: {}\n", c.name, c.with_data);
        for (const auto& [value, count] : c.counts) out += fmt::format("  - {}: {}\n", value, count);
    }
    out += kSeparator + '\n';

    out += "Binary Column Attributes:\n";
    for (const auto& b : s.binary) {
        out += fmt::format("{} Information: Total number with data: {}\n", b.name, b.with_data);
        if (b.with_data > 0) out += fmt::format("  - Number of {}: {}\n", b.name, b.true_count);
    }
    out += kSeparator + '\n';

    out += "Numerical Column Attributes:\n";
    for (const auto& n : s.numeric) {
        out += fmt::format("{} Information: Total number with data: {}\n", n.name, n.with_data);
        if (n.with_data == 0) continue;
        out += fmt::format("  - Mean: {}\n", format_value(n.mean, false));
        out += fmt::format("  - Std Dev: {}\n", format_value(n.std, false));
        out += fmt::format("  - Median: {}\n", format_value(n.median, false));
        out += fmt::format("  - Min: {}\n", format_value(n.min, false));
        out += fmt::format("  - Max: {}\n", format_value(n.max, false));
    }
    return p;
}

Prompt render_cell(const data::Panel& panel, PromptKind kind, int region, int month) {
    const int c = panel.cell(region, month);
    switch (kind) {
        case PromptKind::Accessibility: return render_accessibility(panel.accessibility[c], panel.start);
        case PromptKind::HumanFlow: return render_human_flow(panel.human_flow[c], panel.start);
        case PromptKind::Airbnb:
            return render_airbnb(data::summarize_airbnb(panel.listings[c], panel.regions[region], month), panel.start);
    }
    throw std::invalid_argument("unknown prompt kind");
}

std::size_t dump_prompts(const data::Panel& panel, const std::filesystem::path& dir) {
    std::size_t written = 0;
    for (PromptKind kind : {PromptKind::Accessibility, PromptKind::HumanFlow, PromptKind::Airbnb})
        for (int r = 0; r < panel.num_regions(); ++r) {
            const auto sub = dir / std::string(to_string(kind)) / panel.regions[r].code();
            std::filesystem::create_directories(sub);
            for (int m = 0; m < panel.months; ++m) {
                const Prompt p = render_cell(panel, kind, r, m);
                const auto path = sub / (p.month.calendar.str() + ".txt");
                std::ofstream os(path, std::ios::binary);
                os << p.text;
                if (!os) throw IngestError("cannot write " + path.string());
                ++written;
            }
        }
    return written;
}

}  // namespace rentcast::promptgen
