#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "polyrag/errors.hpp"
#include "polyrag/util.hpp"

namespace polyrag {

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string provider_id() const = 0;
};

// Deterministic feature-hashing stub: each word token lands in one bucket
// with a hash-derived sign. No training, no network, stable across runs.
class HashProjectionProvider : public EmbeddingProvider {
public:
    HashProjectionProvider(std::size_t dimension, std::uint64_t seed)
        : dim_(dimension), seed_(seed) {
        if (dim_ == 0) throw ConfigError("embedding dimension must be >= 1");
    }

    std::vector<double> embed(std::string_view text) const override {
        std::vector<double> v(dim_, 0.0);
        for (const auto& token : tokenize_words(text)) {
            const std::uint64_t h = fnv1a64(token, seed_);
            const std::size_t slot = static_cast<std::size_t>(h % dim_);
            v[slot] += (h >> 63) ? -1.0 : 1.0;
        }
        return v;
    }

    std::size_t dimension() const override { return dim_; }

    std::string provider_id() const override {
        return "hash-" + std::to_string(dim_) + "-" + std::to_string(seed_);
    }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DataError("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw BackendError("zero-norm embedding");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace polyrag
