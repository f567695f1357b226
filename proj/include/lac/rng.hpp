#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lac/tensor.hpp"

namespace lac {

inline uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent sub-streams of one master seed. Deriving a fresh generator
// from (seed, stream, index) keeps every consumer reproducible without
// serializing generator state: resuming at iteration k re-derives the
// exact same draws.
enum class RngStream : uint64_t {
    init = 1,
    data = 2,
    noise = 3,
    decode = 4,
};

// All distributions are implemented on top of mt19937_64 raw draws so the
// byte-exact sequence is pinned by the C++ standard, not by the stdlib's
// distribution internals.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}
    Rng(uint64_t seed, RngStream stream, uint64_t index)
        : gen_(mix64(mix64(seed ^ (static_cast<uint64_t>(stream) << 56)) ^ index)) {}

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller (cosine branch only)
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // uniform integer in [0, n)
    int64_t below(int64_t n) {
        // multiply-shift, bias < 2^-64; deterministic across platforms
        return static_cast<int64_t>((static_cast<unsigned __int128>(gen_()) * static_cast<uint64_t>(n)) >> 64);
    }

    uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

template <class Real>
void fill_normal(Tensor<Real>& t, Rng& rng, double scale = 1.0) {
    for (auto& v : t.data) v = static_cast<Real>(rng.normal() * scale);
}

template <class Real>
void fill_uniform(Tensor<Real>& t, Rng& rng, double lo, double hi) {
    for (auto& v : t.data) v = static_cast<Real>(lo + (hi - lo) * rng.uniform());
}

}  // namespace lac
