#include <doctest.h>

#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "rentcast/data.hpp"
#include "rentcast/promptgen.hpp"
#include "support.hpp"

using namespace rentcast;
using namespace rentcast::promptgen;

namespace {

const YearMonth kStart{2017, 1};

data::VariableRecord zero_record(const std::vector<data::NumericVariable>& vars) {
    data::VariableRecord r{RegionId("D1"), 0, {}};
    for (const auto& v : vars) r.values[v.column] = 0.0;
    return r;
}

data::AirbnbRegionSummary example_summary() {
    data::AirbnbRegionSummary s;
    s.region = RegionId("D7");
    s.month = 2;
    s.total_listings = 3;
    s.categorical.push_back({"Property Type", 3, {{"House", 1}, {"Apt", 2}}});
    s.binary.push_back({"Airbnb Superhost", 3, 2});
    s.numeric.push_back(data::describe("Bedrooms", {1, 2, 3}));
    return s;
}

// Line grammar of the Airbnb summary template; returns "" or the first offending line.
std::string check_airbnb_grammar(const std::string& text) {
    static const std::regex header(R"(\[\d{4}-\d{2} \| [^\]]+\] Airbnb Feature Summary:)");
    static const std::regex total(R"(Total number of AirBnBs: \d+)");
    static const std::regex category(R"(Category: .+ Information: Total number with data: \d+)");
    static const std::regex count_item(R"(  - .+: \d+)");
    static const std::regex binary(R"(.+ Information: Total number with data: \d+)");
    static const std::regex true_count(R"(  - Number of .+: \d+)");
    static const std::regex numeric(R"(.+ Information: Total number with data: \d+)");
    static const std::regex stat(R"(  - (Mean|Std Dev|Median|Min|Max): -?\d+\.\d\d)");
    const std::string separator(59, '-');
    const char* stats[] = {"Mean", "Std Dev", "Median", "Min", "Max"};

    std::vector<std::string> lines;
    std::istringstream stream(text);
    for (std::string l; std::getline(stream, l);) lines.push_back(l);
    if (text.empty() || text.back() != '\n') return "text must end with a newline";
    std::size_t i = 0;
    auto expect = [&](bool ok) { return ok ? std::string() : fmt::format("line {}: '{}'", i + 1, lines[i]); };
    auto at = [&](const std::regex& re) { return i < lines.size() && std::regex_match(lines[i], re); };
    auto is = [&](const std::string& s) { return i < lines.size() && lines[i] == s; };

    if (!at(header)) return expect(false);
    ++i;
    if (!at(total)) return expect(false);
    ++i;
    if (!is("")) return expect(false);
    ++i;
    if (!is("Category Column Attributes:")) return expect(false);
    ++i;
    while (at(category)) {
        ++i;
        while (at(count_item)) ++i;
    }
    if (!is(separator)) return expect(false);
    ++i;
    if (!is("Binary Column Attributes:")) return expect(false);
    ++i;
    while (!is(separator)) {
        if (!at(binary)) return expect(false);
        ++i;
        if (at(true_count)) ++i;
    }
    ++i;
    if (!is("Numerical Column Attributes:")) return expect(false);
    ++i;
    while (i < lines.size()) {
        if (!at(numeric)) return expect(false);
        const bool has_data = !lines[i].ends_with(": 0");
        ++i;
        if (!has_data) continue;
        for (const char* name : stats) {
            if (!at(stat) || lines[i].find(std::string("  - ") + name + ": ") != 0) return expect(false);
            ++i;
        }
    }
    return {};
}

}  // namespace

TEST_CASE("value formatting") {
    CHECK(format_value(102, true) == "102");
    CHECK(format_value(15032.77, false) == "15032.77");
    CHECK(format_value(687.54, false) == "687.54");
    CHECK(format_value(102.5, true) == "102.50");
    CHECK(format_value(0, false) == "0.00");
    CHECK(format_value(0, true) == "0");
    CHECK(format_value(-0.001, false) == "0.00");
    CHECK(format_value(2.0 / 3.0, false) == "0.67");
}

TEST_CASE("accessibility example sentence") {
    data::VariableRecord r = zero_record(data::accessibility_variables());
    r.values["total_roads"] = 102;
    r.values["total_road_length"] = 15032.77;
    const std::string text = render_accessibility(r, kStart).text;
    CHECK(text.find("\nTotal number of roads in the dong: 102, Total length: 15032.77\n") != std::string::npos);
    CHECK(text.rfind("[2017-01 | D1] Accessibility Summary:\n", 0) == 0);
    CHECK(render_accessibility(r, kStart).text == text);
}

TEST_CASE("all-zero accessibility record") {
    const std::string text = render_accessibility(zero_record(data::accessibility_variables()), kStart).text;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    int values = 0;
    static const std::regex pair(R"(([A-Za-z -]+): (0|0\.00))");
    while (std::getline(is, line))
        for (std::sregex_iterator it(line.begin(), line.end(), pair), end; it != end; ++it) ++values;
    CHECK(values == int(data::accessibility_variables().size()));
}

TEST_CASE("human flow example sentence") {
    data::VariableRecord r = zero_record(data::human_flow_variables());
    r.values["domestic_20s_male"] = 687.54;
    r.values["domestic_20s_female"] = 555.01;
    const std::string text = render_human_flow(r, kStart).text;
    CHECK(text.find("\nDomestic Floating Population by Age and Gender 20s Male: 687.54, Female: 555.01\n") !=
          std::string::npos);
    CHECK(text.find("\nShort-Term Foreign Visitors: 0.00\n") != std::string::npos);
}

TEST_CASE("human flow text does not depend on construction order") {
    data::VariableRecord forward{RegionId("D2"), 3, {}}, backward{RegionId("D2"), 3, {}};
    const auto& vars = data::human_flow_variables();
    std::vector<std::pair<std::string, double>> values;
    for (std::size_t i = 0; i < vars.size(); ++i) values.emplace_back(vars[i].column, 100.0 + 1.25 * double(i));
    for (const auto& [k, v] : values) forward.values.emplace(k, v);
    for (auto it = values.rbegin(); it != values.rend(); ++it) backward.values.emplace(it->first, it->second);
    CHECK(render_human_flow(forward, kStart).text == render_human_flow(backward, kStart).text);
}

TEST_CASE("airbnb template on the hand-built example") {
    const std::string expected =
        "[2017-03 | D7] Airbnb Feature Summary:\n"
        "Total number of AirBnBs: 3\n"
        "\n"
        "Category Column Attributes:\n"
        "Category: Property Type Information: Total number with data: 3\n"
        "  - Apt: 2\n"
        "  - House: 1\n"
        "-----------------------------------------------------------\n"
        "Binary Column Attributes:\n"
        "Airbnb Superhost Information: Total number with data: 3\n"
        "  - Number of Airbnb Superhost: 2\n"
        "-----------------------------------------------------------\n"
        "Numerical Column Attributes:\n"
        "Bedrooms Information: Total number with data: 3\n"
        "  - Mean: 2.00\n"
        "  - Std Dev: 0.82\n"
        "  - Median: 2.00\n"
        "  - Min: 1.00\n"
        "  - Max: 3.00\n";
    const Prompt p = render_airbnb(example_summary(), kStart);
    CHECK(p.text == expected);
    CHECK(p.kind == PromptKind::Airbnb);
    CHECK(p.month.index == 2);
    CHECK(render_airbnb(example_summary(), kStart).text == p.text);
}

TEST_CASE("airbnb template with no listings") {
    const data::AirbnbRegionSummary s = data::summarize_airbnb({}, RegionId("D1"), 0);
    const std::string text = render_airbnb(s, kStart).text;
    CHECK(text.find("Total number of AirBnBs: 0\n") != std::string::npos);
    CHECK(text.find("  - ") == std::string::npos);
    CHECK(check_airbnb_grammar(text) == "");
}

TEST_CASE("every fixture airbnb prompt matches the template grammar") {
    const data::Panel panel = data::synthesize(testing::prompt_fixture_spec()).panel;
    for (int r = 0; r < panel.num_regions(); ++r)
        for (int m = 0; m < panel.months; ++m) {
            const std::string text = render_cell(panel, PromptKind::Airbnb, r, m).text;
            const std::string err = check_airbnb_grammar(text);
            REQUIRE_MESSAGE(err.empty(), fmt::format("region {} month {}: {}", r, m, err));
        }
    CHECK(check_airbnb_grammar("Airbnb Feature Summary:\n") != "");
}

TEST_CASE("prompt goldens for the frozen fixture") {
    const data::Panel panel = data::synthesize(testing::prompt_fixture_spec()).panel;
    const std::pair<int, int> cells[] = {{0, 0}, {1, 5}, {3, 11}};
    for (PromptKind kind : {PromptKind::Accessibility, PromptKind::HumanFlow, PromptKind::Airbnb})
        for (auto [r, m] : cells) {
            const Prompt p = render_cell(panel, kind, r, m);
            const std::string name =
                fmt::format("prompts/{}/{}/{}.txt", to_string(kind), p.region.code(), p.month.calendar.str());
            const std::string diff = testing::check_golden(name, p.text);
            CHECK_MESSAGE(diff.empty(), diff);
        }
}

TEST_CASE("changing any single value changes the prompt") {
    const data::Panel panel = data::synthesize(testing::prompt_fixture_spec()).panel;
    for (const auto* vars : {&data::accessibility_variables(), &data::human_flow_variables()}) {
        const bool access = vars == &data::accessibility_variables();
        const data::VariableRecord base = access ? panel.accessibility[7] : panel.human_flow[7];
        auto render = [&](const data::VariableRecord& r) {
            return access ? render_accessibility(r, kStart).text : render_human_flow(r, kStart).text;
        };
        const std::string before = render(base);
        for (const auto& v : *vars)
            for (double delta : {0.01, -0.01, 0.5}) {
                data::VariableRecord changed = base;
                changed.values[v.column] += delta;
                REQUIRE_MESSAGE(render(changed) != before, v.column);
            }
    }

    const data::AirbnbRegionSummary s = data::summarize_airbnb(panel.listings[7], panel.regions[0], 7);
    const std::string before = render_airbnb(s, kStart).text;
    for (std::size_t i = 0; i < s.numeric.size(); ++i) {
        if (s.numeric[i].with_data == 0) continue;  // no statistics printed
        for (double data::NumericSummary::*field :
             {&data::NumericSummary::mean, &data::NumericSummary::std, &data::NumericSummary::median,
              &data::NumericSummary::min, &data::NumericSummary::max}) {
            data::AirbnbRegionSummary changed = s;
            changed.numeric[i].*field += 0.0125;  // 0.01 can round back to the same text
            REQUIRE_MESSAGE(render_airbnb(changed, kStart).text != before, s.numeric[i].name);
        }
    }
    for (std::size_t i = 0; i < s.binary.size(); ++i) {
        if (s.binary[i].with_data == 0) continue;
        data::AirbnbRegionSummary changed = s;
        changed.binary[i].true_count += 1;
        REQUIRE(render_airbnb(changed, kStart).text != before);
    }
}

TEST_CASE("dump writes one file per kind, region and month") {
    testing::TempDir dir;
    const data::Panel panel = data::synthesize(testing::prompt_fixture_spec()).panel;
    CHECK(dump_prompts(panel, dir.path()) == 3u * 4u * 12u);
    const std::string text = testing::read_file(dir / "human_flow/D2/2017-06.txt");
    CHECK(text == render_cell(panel, PromptKind::HumanFlow, 1, 5).text);
}
