#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "regalign/error.hpp"

namespace regalign {

// Counter-based generator: output k is a pure function of (seed, stream, k),
// so independent streams never interact and runs can be replayed from any point.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ (0x632BE59BD9B4E019ULL * (stream + 1)))) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    // uniform in [0,1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * next_normal(); }

    // unbiased integer in [0, bound)
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) raise(ErrorCode::invalid_config, "next_below bound must be positive");
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// n distinct indices from [0, pool_size), returned sorted ascending.
inline std::vector<std::size_t> sample_without_replacement(CounterRng& rng, std::size_t pool_size,
                                                           std::size_t n) {
    if (n > pool_size)
        raise(ErrorCode::invalid_config, "sample size exceeds pool size");
    std::vector<std::size_t> pool(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) pool[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool_size - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace regalign
