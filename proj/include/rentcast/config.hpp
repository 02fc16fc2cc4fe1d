#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "rentcast/core.hpp"

namespace rentcast {

// Config files are INI: top-level keys plus [sections]; overrides use dotted
// keys ("model.architecture=TRANSFORMER").

boost::property_tree::ptree to_ptree(const ExperimentConfig& config);
/// Starts from default_config() and applies every key in `tree`; unknown keys are errors.
ExperimentConfig config_from_ptree(const boost::property_tree::ptree& tree);

std::string to_ini(const ExperimentConfig& config);
ExperimentConfig parse_ini(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Applies "section.key=value" overrides in order, then validates.
ExperimentConfig apply_overrides(const ExperimentConfig& base, const std::vector<std::string>& overrides);

/// Every dotted key accepted in config files and overrides.
std::vector<std::string> config_keys();

}  // namespace rentcast
