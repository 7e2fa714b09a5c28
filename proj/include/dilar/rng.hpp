#pragma once
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace dilar {

// splitmix64 step: advances `state` and returns the next word. Used to
// expand one master seed into independent per-component seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives per-component seeds from one master seed. The draw *order* is part
// of the reproducibility contract; every consumer takes its seed at a fixed,
// documented position in the sequence.
class SeedSequence {
public:
    explicit SeedSequence(std::uint64_t master) : state_(master) {}
    std::uint64_t next() { return splitmix64(state_); }

private:
    std::uint64_t state_;
};

// Deterministic double-precision generator. mt19937_64 output is bit-exact
// across platforms by the standard; the distribution mappings are hand-rolled
// because std::uniform_real_distribution et al. are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // uniform on [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller. Only the cosine branch is used, so one
    // draw always consumes exactly two generator words.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        // 1 - u1 lies in (0, 1], so the log is finite.
        const double rad = std::sqrt(-2.0 * std::log1p(-u1));
        return rad * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace dilar
