#pragma once

#include <cstdint>

namespace chns {

/// splitmix64-seeded xorshift generator with an explicit uniform mapping.
/// Distribution code in the standard library is implementation-defined,
/// so anything that feeds regression-tested output goes through this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(splitmix(seed + 0x9e3779b97f4a7c15ull)) {
        if (s_ == 0) s_ = 0x106689d45497fdb5ull;
    }

    /// Derive an independent stream, e.g. one per family member.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix(seed) ^ splitmix(index * 0xbf58476d1ce4e5b9ull + 1));
    }

    std::uint64_t next_u64() {
        std::uint64_t x = s_;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        s_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    /// uniform in [0,1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// uniform in [a,b)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// uniform integer in [0,n)
    int index(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t s_;
};

} // namespace chns
