#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rentcast/core.hpp"
#include "rentcast/data.hpp"
#include "rentcast/promptgen.hpp"

namespace rentcast::embed {

inline constexpr int kEmbeddingDim = 3072;

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& d);
/// Cache key: SHA-256(model_id || 0x00 || prompt text).
Digest cache_key(std::string_view model_id, std::string_view text);

struct EmbeddingVector {
    std::vector<float> values;
    std::string model_id;
    Digest prompt_digest{};  // cache key of (model_id, prompt)
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string model_id() const = 0;
    /// Raw vector for one prompt; callers validate shape and finiteness.
    virtual std::vector<double> embed(const std::string& text) = 0;
};

/// Offline deterministic backend: unit-norm Gaussian vector seeded by the prompt digest.
class HashBackend : public EmbeddingBackend {
public:
    explicit HashBackend(std::string model_id = "hash-v1") : model_id_(std::move(model_id)) {}
    std::string model_id() const override { return model_id_; }
    std::vector<double> embed(const std::string& text) override;

private:
    std::string model_id_;
};

/// Numeric tokens of the prompt, in order, as sign(x) * log(1 + |x|) in the
/// leading dimensions; the remaining dimensions are the hash backend's output
/// for the prompt's numeric template, so prompts differing only in their
/// values share them.
class NumericBackend : public EmbeddingBackend {
public:
    explicit NumericBackend(std::string model_id = "numeric-v2") : model_id_(std::move(model_id)) {}
    std::string model_id() const override { return model_id_; }
    std::vector<double> embed(const std::string& text) override;

private:
    std::string model_id_;
};

/// Numbers matching -?\d+(\.\d+)? in textual order. A '-' directly after a
/// digit is a separator, not a sign ("2017-03" yields 2017, 3).
std::vector<double> extract_numbers(std::string_view text);
/// The text with every token extract_numbers would read replaced by '#'.
std::string numeric_template(std::string_view text);

struct HttpOptions {
    std::string endpoint;  // base URL, e.g. http://localhost:8080 or http://host/prefix
    std::string model;
    std::string token;
    int max_in_flight = 4;
    int attempts = 3;
    std::chrono::milliseconds backoff{200};  // doubled after every failed attempt
    std::chrono::seconds timeout{60};
};

/// Remote backend: POST {endpoint}/embed {"model","input"} -> {"embedding":[...]}.
class HttpBackend : public EmbeddingBackend {
public:
    explicit HttpBackend(HttpOptions options);
    ~HttpBackend() override;
    std::string model_id() const override { return options_.model; }
    std::vector<double> embed(const std::string& text) override;

private:
    struct Limiter;
    HttpOptions options_;
    std::string host_;
    std::string path_prefix_;
    std::unique_ptr<Limiter> limiter_;
};

/// Builds the configured backend. Environment variables RENTCAST_EMBED_ENDPOINT,
/// RENTCAST_EMBED_MODEL and RENTCAST_EMBED_TOKEN fill unset http settings.
std::unique_ptr<EmbeddingBackend> make_backend(const EmbedSettings& settings);

/// Content-addressed store: one file per key under dir/xx/<hex>.bin holding a
/// header (magic, model id, dim, created-at) and little-endian float32 values.
/// An empty directory keeps entries in memory only.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path dir = {});

    std::optional<std::vector<float>> load(const Digest& key, std::string_view model_id);
    void store(const Digest& key, std::string_view model_id, const std::vector<float>& values);

    std::filesystem::path path_of(const Digest& key) const;
    const std::filesystem::path& dir() const { return dir_; }
    std::size_t corrupt_entries() const { return corrupt_.load(); }

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
    std::map<Digest, std::vector<float>> memory_;
    std::atomic<std::size_t> corrupt_{0};
};

/// Returns the cached vector or invokes the backend once and persists it.
/// Vectors are always returned at float32 precision.
EmbeddingVector embed_cached(const std::string& text, EmbeddingBackend& backend, EmbeddingCache& cache);
EmbeddingVector embed_cached(const promptgen::Prompt& prompt, EmbeddingBackend& backend, EmbeddingCache& cache);

/// Embeds many prompts with `workers` threads; result order follows `texts`.
std::vector<EmbeddingVector> embed_all(std::span<const std::string> texts, EmbeddingBackend& backend,
                                       EmbeddingCache& cache, int workers);

/// Per-modality embedding table for every panel cell: values[m] holds
/// cells x kEmbeddingDim floats for each requested modality (empty otherwise).
struct PanelEmbeddings {
    int cells = 0;
    std::array<std::vector<float>, kNumModalities> values;

    bool has(Modality m) const { return !values[int(m)].empty(); }
    std::span<const float> row(Modality m, int cell) const {
        return std::span<const float>(values[int(m)]).subspan(std::size_t(cell) * kEmbeddingDim, kEmbeddingDim);
    }
};

PanelEmbeddings embed_panel(const data::Panel& panel, const ModalitySet& modalities, EmbeddingBackend& backend,
                            EmbeddingCache& cache, int workers);

}  // namespace rentcast::embed
