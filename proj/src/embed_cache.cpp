#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rentcast/embed.hpp"
#include "rentcast/errors.hpp"

namespace rentcast::embed {

namespace {

constexpr char kMagic[8] = {'R', 'C', 'E', 'M', 'B', '0', '0', '1'};

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

template <typename T>
void put(std::string& buf, T v) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
bool get(std::string_view& buf, T& v) {
    if (buf.size() < sizeof(T)) return false;
    std::memcpy(&v, buf.data(), sizeof(T));
    buf.remove_prefix(sizeof(T));
    return true;
}

std::string encode(std::string_view model_id, const std::vector<float>& values) {
    std::string buf(kMagic, sizeof(kMagic));
    put<std::uint32_t>(buf, std::uint32_t(model_id.size()));
    buf.append(model_id);
    put<std::uint32_t>(buf, std::uint32_t(values.size()));
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    put<std::int64_t>(buf, std::chrono::duration_cast<std::chrono::seconds>(now).count());
    for (float f : values) put<float>(buf, f);
    return buf;
}

std::optional<std::vector<float>> decode(std::string_view buf, std::string_view model_id, std::string& why) {
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        why = "bad magic";
        return std::nullopt;
    }
    buf.remove_prefix(sizeof(kMagic));
    std::uint32_t id_len = 0, dim = 0;
    std::int64_t created = 0;
    if (!get(buf, id_len) || buf.size() < id_len) {
        why = "truncated header";
        return std::nullopt;
    }
    const std::string_view stored_id = buf.substr(0, id_len);
    buf.remove_prefix(id_len);
    if (!get(buf, dim) || !get(buf, created)) {
        why = "truncated header";
        return std::nullopt;
    }
    if (stored_id != model_id) {
        why = fmt::format("model id '{}' does not match '{}'", stored_id, model_id);
        return std::nullopt;
    }
    if (dim != kEmbeddingDim || buf.size() != std::size_t(dim) * sizeof(float)) {
        why = fmt::format("payload holds {} bytes for dim {}", buf.size(), dim);
        return std::nullopt;
    }
    std::vector<float> values(dim);
    std::memcpy(values.data(), buf.data(), buf.size());
    for (float f : values)
        if (!std::isfinite(f)) {
            why = "non-finite value";
            return std::nullopt;
        }
    return values;
}

std::vector<float> validate(const std::vector<double>& raw, const Digest& key) {
    if (raw.size() != std::size_t(kEmbeddingDim))
        throw EmbeddingError(fmt::format("backend returned {} values, expected {}", raw.size(), kEmbeddingDim),
                             to_hex(key));
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = float(raw[i]);
        if (!std::isfinite(raw[i]) || !std::isfinite(out[i]))
            throw EmbeddingError(fmt::format("backend returned a non-finite value at index {}", i), to_hex(key));
    }
    return out;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::filesystem::path EmbeddingCache::path_of(const Digest& key) const {
    const std::string hex = to_hex(key);
    return dir_ / hex.substr(0, 2) / (hex + ".bin");
}

std::optional<std::vector<float>> EmbeddingCache::load(const Digest& key, std::string_view model_id) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    const auto path = path_of(key);
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    const std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::string why;
    auto values = decode(buf, model_id, why);
    if (!values) {
        ++corrupt_;
        spdlog::warn("ignoring corrupt embedding cache entry {}: {}", path.string(), why);
        return std::nullopt;
    }
    std::lock_guard lock(mutex_);
    memory_.emplace(key, *values);
    return values;
}

void EmbeddingCache::store(const Digest& key, std::string_view model_id, const std::vector<float>& values) {
    {
        std::lock_guard lock(mutex_);
        memory_[key] = values;
    }
    if (dir_.empty()) return;
    const auto path = path_of(key);
    std::filesystem::create_directories(path.parent_path());
    static std::atomic<std::uint64_t> counter{0};
    const auto tmp = path.parent_path() /
                     fmt::format("{}.tmp.{}.{}", path.filename().string(),
                                 std::hash<std::thread::id>{}(std::this_thread::get_id()), counter++);
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        const std::string buf = encode(model_id, values);
        os.write(buf.data(), std::streamsize(buf.size()));
        os.close();
        if (!os) throw EmbeddingError("cannot write embedding cache entry " + tmp.string(), to_hex(key));
    }
    std::filesystem::rename(tmp, path);
}

EmbeddingVector embed_cached(const std::string& text, EmbeddingBackend& backend, EmbeddingCache& cache) {
    EmbeddingVector out;
    out.model_id = backend.model_id();
    out.prompt_digest = cache_key(out.model_id, text);
    if (auto hit = cache.load(out.prompt_digest, out.model_id)) {
        out.values = std::move(*hit);
        return out;
    }
    out.values = validate(backend.embed(text), out.prompt_digest);
    cache.store(out.prompt_digest, out.model_id, out.values);
    return out;
}

EmbeddingVector embed_cached(const promptgen::Prompt& prompt, EmbeddingBackend& backend, EmbeddingCache& cache) {
    return embed_cached(prompt.text, backend, cache);
}

std::vector<EmbeddingVector> embed_all(std::span<const std::string> texts, EmbeddingBackend& backend,
                                       EmbeddingCache& cache, int workers) {
    std::vector<EmbeddingVector> out(texts.size());
    workers = std::max(1, std::min<int>(workers, int(texts.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < texts.size(); ++i) out[i] = embed_cached(texts[i], backend, cache);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < texts.size(); i = next++) {
                    try {
                        out[i] = embed_cached(texts[i], backend, cache);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next = texts.size();
                    }
                }
            });
    }
    if (error) std::rethrow_exception(error);
    return out;
}

PanelEmbeddings embed_panel(const data::Panel& panel, const ModalitySet& modalities, EmbeddingBackend& backend,
                            EmbeddingCache& cache, int workers) {
    PanelEmbeddings table;
    table.cells = panel.num_regions() * panel.months;
    for (Modality m : modalities.members()) {
        std::vector<std::string> texts;
        texts.reserve(std::size_t(table.cells));
        for (int r = 0; r < panel.num_regions(); ++r)
            for (int t = 0; t < panel.months; ++t)
                texts.push_back(promptgen::render_cell(panel, promptgen::kind_of(m), r, t).text);
        auto vectors = embed_all(texts, backend, cache, workers);
        auto& dest = table.values[int(m)];
        dest.resize(std::size_t(table.cells) * kEmbeddingDim);
        for (int c = 0; c < table.cells; ++c)
            std::copy(vectors[c].values.begin(), vectors[c].values.end(),
                      dest.begin() + std::ptrdiff_t(c) * kEmbeddingDim);
        spdlog::debug("embedded {} {} prompts", texts.size(), to_string(m));
    }
    return table;
}

}  // namespace rentcast::embed
