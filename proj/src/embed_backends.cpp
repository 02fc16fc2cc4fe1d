#include <bit>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <semaphore>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "rentcast/embed.hpp"
#include "rentcast/errors.hpp"
#include "rentcast/random.hpp"

namespace rentcast::embed {

Digest sha256(std::string_view bytes) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
        throw std::runtime_error("SHA-256 computation failed");
    return out;
}

std::string to_hex(const Digest& d) {
    std::string s;
    s.reserve(64);
    for (auto b : d) s += fmt::format("{:02x}", b);
    return s;
}

Digest cache_key(std::string_view model_id, std::string_view text) {
    std::string buf;
    buf.reserve(model_id.size() + 1 + text.size());
    buf.append(model_id);
    buf.push_back('\0');
    buf.append(text);
    return sha256(buf);
}

namespace {

std::uint64_t stream_seed(const std::string& text) {
    const Digest d = sha256(text);
    std::uint64_t s = 0;
    for (int i = 0; i < 8; ++i) s |= std::uint64_t(d[i]) << (8 * i);
    return s;
}

// Counter-based: element i depends only on (seed, i).
double stream_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t x = mix64(seed ^ mix64(counter));
    return (double(x >> 11) + 0.5) * 0x1.0p-53;  // open interval (0, 1)
}

std::vector<double> hash_vector(const std::string& text) {
    const std::uint64_t seed = stream_seed(text);
    std::vector<double> v(kEmbeddingDim);
    for (int i = 0; i < kEmbeddingDim; i += 2) {
        const double u1 = stream_uniform(seed, std::uint64_t(i));
        const double u2 = stream_uniform(seed, std::uint64_t(i + 1));
        const double radius = std::sqrt(-2.0 * std::log(u1));
        v[i] = radius * std::cos(2.0 * std::numbers::pi * u2);
        v[i + 1] = radius * std::sin(2.0 * std::numbers::pi * u2);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<double> HashBackend::embed(const std::string& text) { return hash_vector(text); }

namespace {

// Calls on_number(begin, end) for every numeric token and on_other(c) for every other character.
template <class OnNumber, class OnOther>
void scan_numbers(std::string_view text, OnNumber on_number, OnOther on_other) {
    std::size_t i = 0;
    while (i < text.size()) {
        const bool sign = text[i] == '-' && i + 1 < text.size() && is_digit(text[i + 1]) &&
                          !(i > 0 && is_digit(text[i - 1]));
        if (!sign && !is_digit(text[i])) {
            on_other(text[i]);
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (sign) ++i;
        while (i < text.size() && is_digit(text[i])) ++i;
        if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
            ++i;
            while (i < text.size() && is_digit(text[i])) ++i;
        }
        on_number(start, i);
    }
}

}  // namespace

std::vector<double> extract_numbers(std::string_view text) {
    std::vector<double> out;
    scan_numbers(
        text,
        [&](std::size_t b, std::size_t e) {
            out.push_back(std::strtod(std::string(text.substr(b, e - b)).c_str(), nullptr));
        },
        [](char) {});
    return out;
}

std::string numeric_template(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    scan_numbers(
        text, [&](std::size_t, std::size_t) { out += '#'; }, [&](char c) { out += c; });
    return out;
}

std::vector<double> NumericBackend::embed(const std::string& text) {
    std::vector<double> v = hash_vector(numeric_template(text));
    const std::vector<double> numbers = extract_numbers(text);
    const std::size_t n = std::min<std::size_t>(numbers.size(), kEmbeddingDim);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = numbers[i];
        v[i] = std::copysign(std::log1p(std::abs(x)), x);
    }
    return v;
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

struct HttpBackend::Limiter {
    explicit Limiter(int n) : slots(n) {}
    std::counting_semaphore<1024> slots;
};

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) throw ConfigError("http embedding backend: no endpoint configured");
    if (options_.max_in_flight < 1 || options_.max_in_flight > 1024)
        throw ConfigError("embed.max_in_flight must be in [1, 1024]");
    if (options_.attempts < 1) throw ConfigError("http embedding backend: attempts must be >= 1");
    std::string url = options_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    host_ = url.substr(0, slash);
    path_prefix_ = slash == std::string::npos ? "" : url.substr(slash);
    limiter_ = std::make_unique<Limiter>(options_.max_in_flight);
}

HttpBackend::~HttpBackend() = default;

std::vector<double> HttpBackend::embed(const std::string& text) {
    const std::string key = to_hex(cache_key(options_.model, text));
    const std::string body = nlohmann::json{{"model", options_.model}, {"input", text}}.dump();
    httplib::Headers headers;
    if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);

    std::string last_error;
    auto backoff = options_.backoff;
    for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Result res;
        {
            limiter_->slots.acquire();
            httplib::Client client(host_);
            client.set_connection_timeout(options_.timeout);
            client.set_read_timeout(options_.timeout);
            res = client.Post(path_prefix_ + "/embed", headers, body, "application/json");
            limiter_->slots.release();
        }
        if (!res) {
            last_error = fmt::format("request failed: {}", httplib::to_string(res.error()));
        } else if (res->status >= 500 || res->status == 429) {
            last_error = fmt::format("HTTP {}", res->status);
        } else if (res->status != 200) {
            throw EmbeddingError(fmt::format("embedding request rejected with HTTP {}", res->status), key);
        } else {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw EmbeddingError(fmt::format("malformed embedding response: {}", e.what()), key);
            }
            if (!doc.is_object() || !doc.contains("embedding") || !doc["embedding"].is_array())
                throw EmbeddingError("embedding response has no 'embedding' array", key);
            std::vector<double> out;
            out.reserve(doc["embedding"].size());
            for (const auto& x : doc["embedding"]) {
                if (!x.is_number()) throw EmbeddingError("embedding response contains a non-finite value", key);
                out.push_back(x.get<double>());
            }
            return out;
        }
        spdlog::warn("embedding attempt {}/{} for {} failed: {}", attempt, options_.attempts, key.substr(0, 12),
                     last_error);
    }
    throw EmbeddingError(fmt::format("embedding failed after {} attempts: {}", options_.attempts, last_error), key);
}

std::unique_ptr<EmbeddingBackend> make_backend(const EmbedSettings& s) {
    if (s.backend == "hash") return std::make_unique<HashBackend>(s.model_id.empty() ? "hash-v1" : s.model_id);
    if (s.backend == "numeric")
        return std::make_unique<NumericBackend>(s.model_id.empty() ? "numeric-v2" : s.model_id);
    if (s.backend == "http") {
        auto env = [](const char* name) {
            const char* v = std::getenv(name);
            return std::string(v ? v : "");
        };
        HttpOptions o;
        o.endpoint = s.endpoint.empty() ? env("RENTCAST_EMBED_ENDPOINT") : s.endpoint;
        o.model = s.model_id.empty() ? env("RENTCAST_EMBED_MODEL") : s.model_id;
        o.token = env("RENTCAST_EMBED_TOKEN");
        o.max_in_flight = s.max_in_flight;
        if (o.model.empty()) throw ConfigError("http embedding backend: no model configured");
        return std::make_unique<HttpBackend>(std::move(o));
    }
    throw ConfigError(fmt::format("unknown embedding backend '{}' (expected hash, numeric or http)", s.backend));
}

}  // namespace rentcast::embed
