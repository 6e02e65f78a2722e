#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ape {

/// Deterministic RNG built directly on the standardized mt19937_64 output
/// sequence. std::uniform_int_distribution and std::shuffle are not
/// reproducible across standard libraries, so bounded draws and shuffles
/// are implemented here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    /// Unbiased draw in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        for (;;) {
            std::uint64_t r = eng_();
            if (r >= threshold) return r % n;
        }
    }

    /// Fisher-Yates shuffle using bounded().
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Index draw proportional to non-negative integer weights (sum > 0).
    std::size_t weighted_index(const std::vector<std::uint64_t>& weights) {
        std::uint64_t total = 0;
        for (auto w : weights) total += w;
        std::uint64_t r = bounded(total);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (r < weights[i]) return i;
            r -= weights[i];
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 eng_;
};

/// Mix a base seed with a salt into a new stream seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace ape
