#pragma once

#include <cstdint>
#include <initializer_list>

namespace rddp {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream counters, draw index), so trajectories can be generated
/// independently and in any order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) : key_(mix(seed)) {
        for (auto s : stream) key_ = mix(key_ ^ mix(s + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rddp
