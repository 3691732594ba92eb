#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>

namespace wafl {

// SplitMix64 (Steele/Lea/Flood). Used for seeding and seed derivation.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

// xoshiro256** (Blackman & Vigna). The standard library's shuffle and
// distributions are implementation-defined, so runs would not reproduce
// across standard libraries; this generator and the helpers below are
// fully specified.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform integer in [0, n). Rejection sampling, so exactly uniform.
    uint64_t bounded(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform real in [0, 1) with 53 random bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

// Derives a substream seed from a master seed and up to three stream words.
// Each word is absorbed with one SplitMix64 step, so
// derive_seed(m, a, b) == derive_seed(m, a, b, 0) and distinct word tuples
// give decorrelated streams. This is the mixing function used for
// per-(node, epoch) shuffle seeds.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    SplitMix64 sm(master);
    uint64_t s = sm.next();
    for (uint64_t w : {a, b, c}) {
        SplitMix64 absorb(s ^ (w + 0x9e3779b97f4a7c15ull));
        s = absorb.next();
    }
    return s;
}

// Stream tags for derive_seed so different uses of the master seed never
// collide.
namespace seed_stream {
inline constexpr uint64_t kInit = 1;       // model initialization
inline constexpr uint64_t kShuffle = 2;    // per-(node, epoch) mini-batch shuffle
inline constexpr uint64_t kSubset = 3;     // subset_fraction downsampling
inline constexpr uint64_t kSelfTrain = 4;  // pre-collaboration passes
inline constexpr uint64_t kAttack = 5;     // in-run poison generation
}  // namespace seed_stream

// Fisher-Yates shuffle driven by Rng::bounded.
template <typename T>
void shuffle(std::span<T> xs, Rng& rng) {
    for (size_t i = xs.size(); i > 1; --i) {
        const size_t j = size_t(rng.bounded(i));
        std::swap(xs[i - 1], xs[j]);
    }
}

}  // namespace wafl
