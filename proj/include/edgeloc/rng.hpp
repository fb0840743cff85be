#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace edgeloc {

// SplitMix64. Fixed algorithm (not std::mt19937 / std::uniform_*) so that a
// seed reproduces bit-identical streams across compilers and platforms;
// every artifact determinism guarantee rests on this.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1)
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Modulo is fine here: n is always tiny
    // relative to 2^64 and only reproducibility matters.
    uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {  // Fisher-Yates, pinned order
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// Position-stable pixel hash: independent of draw order, so per-pixel noise
// fields don't shift when unrelated draws are added to a generator.
inline uint64_t pixel_hash(uint64_t seed, int64_t x, int64_t y) {
    uint64_t z = seed ^ (static_cast<uint64_t>(x) * 0xd2b74407b1ce6e93ULL)
                      ^ (static_cast<uint64_t>(y) * 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace edgeloc
