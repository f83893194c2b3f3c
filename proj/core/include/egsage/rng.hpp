#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace egsage {

// Seeded random source. Uniform, normal, shuffle and sampling are implemented
// on top of the raw mt19937_64 stream instead of std:: distributions, whose
// output may differ between standard library implementations. Every draw is a
// pure function of the seed and the call sequence, which is what makes
// serialized artifacts bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    auto next_u64() -> std::uint64_t { return engine_(); }

    // Uniform double in [0, 1) with 53 bits of randomness.
    auto uniform() -> double;

    // Uniform double in [lo, hi).
    auto uniform(double lo, double hi) -> double;

    // Standard normal via Box-Muller, one spare value cached.
    auto normal() -> double;

    // Uniform index in [0, n). n must be positive.
    auto index(std::size_t n) -> std::size_t;

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

    // k distinct indices drawn uniformly from [0, n), in draw order.
    auto sample_without_replacement(std::size_t n, std::size_t k) -> std::vector<std::size_t>;

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

} // namespace egsage
