#pragma once

#include <stdexcept>
#include <string>

namespace rentcast {

/// Invalid or inconsistent experiment/CLI configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw table ingestion failure; the message names the file and row.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Embedding backend or cache failure; carries the hex cache key of the prompt.
class EmbeddingError : public std::runtime_error {
public:
    EmbeddingError(const std::string& what, std::string key)
        : std::runtime_error(what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Tensor/vector shape mismatch.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Feature assembly failure (a configured modality part is missing or mis-sized).
class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss during training.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rentcast
