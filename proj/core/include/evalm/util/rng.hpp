#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace evalm::util {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic generator with hand-rolled distributions so that sampled
// streams are identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // Warm up so that nearby seeds diverge immediately.
        splitmix64(state_);
    }

    // Derives an independent stream from (seed, ids...). Used to give every
    // (step, line) pair in training its own reproducible stream.
    static Rng derive(uint64_t seed, std::initializer_list<uint64_t> ids) {
        uint64_t s = seed;
        uint64_t acc = splitmix64(s);
        for (uint64_t id : ids) {
            s = acc ^ (id + 0x9e3779b97f4a7c15ull);
            acc = splitmix64(s);
        }
        return Rng(acc);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // [0, n), unbiased enough for shuffles and sampling (128-bit multiply).
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>((static_cast<__uint128_t>(next_u64()) *
                                     static_cast<__uint128_t>(n)) >>
                                    64);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = uniform_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace evalm::util
