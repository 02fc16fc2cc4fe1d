#include "rentcast/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include "rentcast/errors.hpp"

namespace rentcast {

namespace pt = boost::property_tree;

namespace {

int parse_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    try {
        long long x = std::stoll(v, &used);
        if (used == v.size()) return static_cast<int>(x);
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: expected integer, got '{}'", key, v));
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    try {
        unsigned long long x = std::stoull(v, &used);
        if (used == v.size() && v.find('-') == std::string::npos) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: expected unsigned integer, got '{}'", key, v));
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    try {
        double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("{}: expected number, got '{}'", key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, v));
}

struct Binding {
    std::string path;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename Member>
Binding int_binding(std::string path, Member member) {
    return {path, [member](const ExperimentConfig& c) { return std::to_string(std::invoke(member, c)); },
            [member, path](ExperimentConfig& c, const std::string& v) { std::invoke(member, c) = parse_int(path, v); }};
}

template <typename Member>
Binding double_binding(std::string path, Member member) {
    return {path, [member](const ExperimentConfig& c) { return fmt::format("{}", std::invoke(member, c)); },
            [member, path](ExperimentConfig& c, const std::string& v) {
                std::invoke(member, c) = parse_double(path, v);
            }};
}

template <typename Member>
Binding string_binding(std::string path, Member member) {
    return {path, [member](const ExperimentConfig& c) { return std::invoke(member, c); },
            [member](ExperimentConfig& c, const std::string& v) { std::invoke(member, c) = v; }};
}

template <typename Member>
Binding bool_binding(std::string path, Member member) {
    return {path, [member](const ExperimentConfig& c) { return std::string(std::invoke(member, c) ? "true" : "false"); },
            [member, path](ExperimentConfig& c, const std::string& v) { std::invoke(member, c) = parse_bool(path, v); }};
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = [] {
        using C = ExperimentConfig;
        std::vector<Binding> b;
        b.push_back(string_binding("variant", &C::variant));
        b.push_back({"seed", [](const C& c) { return std::to_string(c.seed); },
                     [](C& c, const std::string& v) { c.seed = parse_u64("seed", v); }});
        b.push_back(int_binding("window.size", &C::window_size));
        b.push_back(int_binding("window.horizon", &C::horizon));
        b.push_back(int_binding("window.stride", &C::stride));
        b.push_back(int_binding("split.train", [](auto& c) -> auto& { return c.split.train; }));
        b.push_back(int_binding("split.val", [](auto& c) -> auto& { return c.split.val; }));
        b.push_back(int_binding("split.test", [](auto& c) -> auto& { return c.split.test; }));
        b.push_back(int_binding("dims.accessibility", [](auto& c) -> auto& { return c.dims.accessibility; }));
        b.push_back(int_binding("dims.human_flow", [](auto& c) -> auto& { return c.dims.human_flow; }));
        b.push_back(int_binding("dims.airbnb", [](auto& c) -> auto& { return c.dims.airbnb; }));
        b.push_back(int_binding("dims.label", [](auto& c) -> auto& { return c.dims.label; }));
        b.push_back(double_binding("loss.alpha", [](auto& c) -> auto& { return c.loss_weights.alpha; }));
        b.push_back(double_binding("loss.beta", [](auto& c) -> auto& { return c.loss_weights.beta; }));
        b.push_back(double_binding("loss.gamma", [](auto& c) -> auto& { return c.loss_weights.gamma; }));
        b.push_back({"model.architecture", [](const C& c) { return std::string(to_string(c.architecture)); },
                     [](C& c, const std::string& v) { c.architecture = parse_architecture(v); }});
        b.push_back(int_binding("model.hidden", [](auto& c) -> auto& { return c.model.hidden; }));
        b.push_back(int_binding("model.layers", [](auto& c) -> auto& { return c.model.layers; }));
        b.push_back(int_binding("model.heads", [](auto& c) -> auto& { return c.model.heads; }));
        b.push_back(int_binding("model.ffn", [](auto& c) -> auto& { return c.model.ffn; }));
        b.push_back({"features.modalities", [](const C& c) { return c.modalities.str(); },
                     [](C& c, const std::string& v) { c.modalities = ModalitySet::parse(v); }});
        b.push_back(bool_binding("features.use_llm_embedding", &C::use_llm_embedding));
        b.push_back(double_binding("train.learning_rate", [](auto& c) -> auto& { return c.train.learning_rate; }));
        b.push_back(int_binding("train.max_epochs", [](auto& c) -> auto& { return c.train.max_epochs; }));
        b.push_back(int_binding("train.patience", [](auto& c) -> auto& { return c.train.patience; }));
        b.push_back(string_binding("embed.backend", [](auto& c) -> auto& { return c.embed.backend; }));
        b.push_back(string_binding("embed.cache_dir", [](auto& c) -> auto& { return c.embed.cache_dir; }));
        b.push_back(string_binding("embed.endpoint", [](auto& c) -> auto& { return c.embed.endpoint; }));
        b.push_back(string_binding("embed.model", [](auto& c) -> auto& { return c.embed.model_id; }));
        b.push_back(int_binding("embed.max_in_flight", [](auto& c) -> auto& { return c.embed.max_in_flight; }));
        b.push_back(int_binding("embed.workers", [](auto& c) -> auto& { return c.embed.workers; }));
        b.push_back(string_binding("data.path", [](auto& c) -> auto& { return c.data.path; }));
        b.push_back(string_binding("data.schema", [](auto& c) -> auto& { return c.data.schema; }));
        b.push_back(bool_binding("data.select_active_regions",
                                 [](auto& c) -> auto& { return c.data.select_active_regions; }));
        return b;
    }();
    return table;
}

const Binding& find_binding(const std::string& path) {
    for (const auto& b : bindings())
        if (b.path == path) return b;
    throw ConfigError(fmt::format("unknown config key '{}'", path));
}

void collect(const pt::ptree& tree, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    for (const auto& [key, child] : tree) {
        std::string path = prefix.empty() ? key : prefix + "." + key;
        if (child.empty())
            out.emplace_back(path, child.data());
        else
            collect(child, path, out);
    }
}

}  // namespace

pt::ptree to_ptree(const ExperimentConfig& config) {
    pt::ptree tree;
    for (const auto& b : bindings()) tree.put(pt::ptree::path_type(b.path, '.'), b.get(config));
    return tree;
}

ExperimentConfig config_from_ptree(const pt::ptree& tree) {
    ExperimentConfig config = default_config();
    std::vector<std::pair<std::string, std::string>> entries;
    collect(tree, "", entries);
    for (const auto& [path, value] : entries) find_binding(path).set(config, value);
    return config;
}

std::string to_ini(const ExperimentConfig& config) {
    std::ostringstream os;
    pt::write_ini(os, to_ptree(config));
    return os.str();
}

ExperimentConfig parse_ini(const std::string& text) {
    std::istringstream is(text);
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config parse error: {}", e.what()));
    }
    return config_from_ptree(tree);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config file not found: {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig config = parse_ini(ss.str());
    config.validate();
    return config;
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write config: {}", path.string()));
    out << to_ini(config);
}

ExperimentConfig apply_overrides(const ExperimentConfig& base, const std::vector<std::string>& overrides) {
    ExperimentConfig config = base;
    for (const auto& item : overrides) {
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(fmt::format("override '{}' is not key=value", item));
        find_binding(item.substr(0, eq)).set(config, item.substr(eq + 1));
    }
    config.validate();
    return config;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& b : bindings()) keys.push_back(b.path);
    return keys;
}

}  // namespace rentcast
