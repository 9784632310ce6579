#pragma once
// Counter-based seeding: every stream is a pure function of (seed, counters),
// so serial and parallel runs draw identical numbers.
#include <cstdint>
#include <initializer_list>

namespace mcfusion {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t c : counters) h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
    return h;
}

// Uniform double in [0, 1) keyed by (seed, index).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(derive_seed(seed, {index}) >> 11) * 0x1.0p-53;
}

}  // namespace mcfusion
