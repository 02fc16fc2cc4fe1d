#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rentcast/core.hpp"
#include "rentcast/data.hpp"

namespace rentcast::promptgen {

enum class PromptKind { Accessibility, HumanFlow, Airbnb };

std::string_view to_string(PromptKind kind);  // directory name: accessibility / human_flow / airbnb
PromptKind kind_of(Modality m);

struct Prompt {
    PromptKind kind = PromptKind::Accessibility;
    RegionId region;
    MonthIndex month;
    std::string text;
};

/// Reals as exactly two decimals; integer-kind variables holding an integral
/// value print without a decimal point.
std::string format_value(double v, bool integer_kind);

Prompt render_accessibility(const data::AccessibilityRecord& record, YearMonth start);
Prompt render_human_flow(const data::HumanFlowRecord& record, YearMonth start);
Prompt render_airbnb(const data::AirbnbRegionSummary& summary, YearMonth start);

/// Renders the prompt of `kind` for one panel cell.
Prompt render_cell(const data::Panel& panel, PromptKind kind, int region, int month);

/// Writes every prompt of the panel as {kind}/{region}/{YYYY-MM}.txt; returns the number written.
std::size_t dump_prompts(const data::Panel& panel, const std::filesystem::path& dir);

}  // namespace rentcast::promptgen
