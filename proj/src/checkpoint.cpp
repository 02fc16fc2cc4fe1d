#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "rentcast/config.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/model.hpp"

namespace rentcast::model {

namespace {

constexpr char kMagic[8] = {'R', 'C', 'C', 'K', 'P', 'T', '0', '1'};

}  // namespace

Checkpoint snapshot(Forecaster& f, const data::NormStats& norm, int epoch, double val_total) {
    Checkpoint c;
    c.config = f.config();
    c.input_widths = f.input_widths();
    c.norm = norm;
    c.epoch = epoch;
    c.val_total = val_total;
    std::vector<Parameter*> all = f.parameters();
    for (Parameter* b : f.buffers()) all.push_back(b);
    for (const Parameter* p : all) {
        Parameter copy(p->name, p->value.rows, p->value.cols);
        copy.value = p->value;
        c.tensors.push_back(std::move(copy));
    }
    return c;
}

void restore(Forecaster& f, const Checkpoint& ckpt) {
    std::map<std::string, const Parameter*> by_name;
    for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
    std::vector<Parameter*> all = f.parameters();
    for (Parameter* b : f.buffers()) all.push_back(b);
    for (Parameter* p : all) {
        auto it = by_name.find(p->name);
        if (it == by_name.end()) throw ShapeError("checkpoint has no tensor " + p->name);
        if (!it->second->value.same_shape(p->value))
            throw ShapeError(fmt::format("checkpoint tensor {} is {}x{}, model expects {}x{}", p->name,
                                         it->second->value.rows, it->second->value.cols, p->value.rows,
                                         p->value.cols));
        p->value = it->second->value;
    }
}

std::unique_ptr<Forecaster> instantiate(const Checkpoint& ckpt) {
    auto f = std::make_unique<Forecaster>(ckpt.config, ckpt.input_widths);
    restore(*f, ckpt);
    return f;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    nlohmann::json header;
    header["config"] = to_ini(ckpt.config);
    header["input_widths"] = ckpt.input_widths;
    header["epoch"] = ckpt.epoch;
    header["val_total"] = ckpt.val_total;
    header["norm"] = {{"label_mean", ckpt.norm.label_mean},
                      {"label_std", ckpt.norm.label_std},
                      {"feature_mean", ckpt.norm.feature_mean},
                      {"feature_std", ckpt.norm.feature_std}};
    nlohmann::json table = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& t : ckpt.tensors) {
        table.push_back({{"name", t.name}, {"rows", t.value.rows}, {"cols", t.value.cols}, {"offset", offset}});
        offset += t.value.size();
    }
    header["tensors"] = table;
    const std::string text = header.dump();

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        os.write(kMagic, sizeof kMagic);
        const std::uint64_t len = text.size();
        os.write(reinterpret_cast<const char*>(&len), sizeof len);
        os.write(text.data(), std::streamsize(text.size()));
        for (const auto& t : ckpt.tensors)
            os.write(reinterpret_cast<const char*>(t.value.data.data()),
                     std::streamsize(t.value.size() * sizeof(double)));
        if (!os) throw TrainingError("cannot write checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("checkpoint not found: " + path.string());
    char magic[sizeof kMagic] = {};
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw TrainingError("not a checkpoint: " + path.string());
    std::uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!is || len > (1u << 30)) throw TrainingError("corrupt checkpoint header: " + path.string());
    std::string text(len, '\0');
    is.read(text.data(), std::streamsize(len));
    if (!is) throw TrainingError("truncated checkpoint header: " + path.string());

    Checkpoint c;
    try {
        const auto header = nlohmann::json::parse(text);
        c.config = parse_ini(header.at("config").get<std::string>());
        c.input_widths = header.at("input_widths").get<std::array<int, kNumModalities>>();
        c.epoch = header.at("epoch").get<int>();
        c.val_total = header.at("val_total").get<double>();
        const auto& norm = header.at("norm");
        c.norm.label_mean = norm.at("label_mean").get<std::array<double, kNumTargets>>();
        c.norm.label_std = norm.at("label_std").get<std::array<double, kNumTargets>>();
        c.norm.feature_mean = norm.at("feature_mean").get<std::vector<double>>();
        c.norm.feature_std = norm.at("feature_std").get<std::vector<double>>();
        for (const auto& t : header.at("tensors")) {
            Parameter p(t.at("name").get<std::string>(), t.at("rows").get<int>(), t.at("cols").get<int>());
            c.tensors.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw TrainingError(fmt::format("corrupt checkpoint header in {}: {}", path.string(), e.what()));
    }
    for (auto& t : c.tensors) {
        is.read(reinterpret_cast<char*>(t.value.data.data()), std::streamsize(t.value.size() * sizeof(double)));
        if (!is) throw TrainingError("truncated checkpoint payload: " + path.string());
    }
    return c;
}

}  // namespace rentcast::model
