#include "egsage/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "egsage/errors.hpp"

namespace egsage {

auto Rng::uniform() -> double {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

auto Rng::uniform(double lo, double hi) -> double {
    return lo + (hi - lo) * uniform();
}

auto Rng::normal() -> double {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log argument positive.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
}

auto Rng::index(std::size_t n) -> std::size_t {
    if (n == 0) {
        throw StateError("Rng::index: n must be positive");
    }
    // Rejection sampling over the largest multiple of n fitting in 64 bits
    // keeps the draw exactly uniform.
    std::uint64_t bound = n;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
        draw = next_u64();
    }
    return static_cast<std::size_t>(draw % bound);
}

auto Rng::sample_without_replacement(std::size_t n, std::size_t k) -> std::vector<std::size_t> {
    if (k > n) {
        throw StateError("Rng::sample_without_replacement: k exceeds n");
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> picked;
    picked.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + index(n - i);
        std::swap(pool[i], pool[j]);
        picked.push_back(pool[i]);
    }
    return picked;
}

} // namespace egsage
