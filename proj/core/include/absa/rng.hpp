#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace absa {

// Deterministic, splittable random source. Every consumer (init, dropout,
// shuffling, synthetic data) takes its own named stream so adding draws to
// one consumer never shifts another, and the same master seed reproduces a
// run bit for bit.
//
// Distribution transforms are hand-rolled on top of mt19937_64 output, so
// the byte stream does not depend on the standard library's (unspecified)
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Child stream derived from this stream's seed and a consumer name.
    Rng stream(std::string_view name) const;
    // Child stream additionally keyed by an index (per-run, per-cell seeds).
    Rng stream(std::string_view name, std::uint64_t index) const;

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double next_uniform();

    // Standard normal via Box-Muller (spare value cached).
    double next_normal();

    // Normal(0, stddev) resampled until |z| <= clip * stddev.
    double next_truncated_normal(double stddev, double clip = 2.0);

    // Uniform integer in [0, n), n >= 1, rejection-sampled (no modulo bias).
    std::uint64_t next_below(std::uint64_t n);

    // Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a, used for stream naming and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace absa
