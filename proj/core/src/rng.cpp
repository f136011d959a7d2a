#include "absa/rng.hpp"

#include <cmath>
#include <numbers>

#include "absa/error.hpp"

namespace absa {

namespace {

// splitmix64, used to decorrelate derived seeds.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

Rng Rng::stream(std::string_view name) const {
    return Rng(mix(seed_ ^ fnv1a64(name)));
}

Rng Rng::stream(std::string_view name, std::uint64_t index) const {
    return Rng(mix(mix(seed_ ^ fnv1a64(name)) + index));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    // Guard log(0); 1 - u1 lies in (0, 1].
    double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::next_truncated_normal(double stddev, double clip) {
    if (stddev <= 0.0) throw ConfigError("truncated normal requires stddev > 0");
    for (;;) {
        double z = next_normal();
        if (std::abs(z) <= clip) return z * stddev;
    }
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw UsageError("next_below requires n >= 1");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
        std::uint64_t v = engine_();
        if (v < limit) return v % n;
    }
}

}  // namespace absa
