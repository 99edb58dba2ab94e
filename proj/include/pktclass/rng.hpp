#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace pktclass {

// 64-bit FNV-1a. Used for stage tags and config hashes.
constexpr uint64_t fnv1a64(std::string_view s) noexcept {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& state) noexcept {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from the run seed and a stage tag, so
// partial pipeline re-runs reproduce without replaying earlier stages.
inline uint64_t derive_seed(uint64_t run_seed, std::string_view stage) noexcept {
    uint64_t s = run_seed ^ fnv1a64(stage);
    return splitmix64(s);
}

inline uint64_t derive_seed(uint64_t run_seed, std::string_view stage, uint64_t salt) noexcept {
    uint64_t s = run_seed ^ fnv1a64(stage);
    s ^= 0x517cc1b727220a95ull * (salt + 1);
    return splitmix64(s);
}

// Deterministic generator. mt19937_64 output is fully specified by the
// standard; the standard *distributions* are not, so all draws are
// implemented here to keep streams reproducible across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased draw from [0, bound) by rejection.
    uint64_t below(uint64_t bound) {
        if (bound == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    // Inclusive integer range.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Box-Muller; the second variate is cached.
    double normal(double mean, double stddev) {
        if (have_cached_) {
            have_cached_ = false;
            return mean + stddev * cached_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    void fill_bytes(std::span<uint8_t> out) {
        size_t i = 0;
        while (i + 8 <= out.size()) {
            uint64_t v = engine_();
            for (int b = 0; b < 8; ++b) out[i++] = static_cast<uint8_t>(v >> (8 * b));
        }
        if (i < out.size()) {
            uint64_t v = engine_();
            while (i < out.size()) {
                out[i++] = static_cast<uint8_t>(v);
                v >>= 8;
            }
        }
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace pktclass
