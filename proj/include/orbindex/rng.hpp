#pragma once

#include <cstdint>
#include <random>

namespace orbindex {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded source with one independent substream per path index. The engine for
// a path depends only on (seed, index), never on worker layout, so runs are
// reproducible for any thread count.
struct RandomSource {
    std::uint64_t seed = 0;

    std::mt19937_64 engine_for_path(std::uint64_t index) const {
        std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (index + 1));
        std::uint64_t a = splitmix64(s), b = splitmix64(s), c = splitmix64(s), d = splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                          static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
        return std::mt19937_64(seq);
    }
};

} // namespace orbindex
