#pragma once

#include <cstdint>
#include <random>

namespace hypfill {

// splitmix64; used to derive independent per-task seeds from (seed, index)
// so results do not depend on execution order.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 task_rng(uint64_t seed, uint64_t task) {
    return std::mt19937_64(splitmix64(seed * 0x9e3779b97f4a7c15ULL + splitmix64(task + 1)));
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double gaussian(std::mt19937_64& g, double sigma = 1.0) {
    return std::normal_distribution<double>(0.0, sigma)(g);
}

}  // namespace hypfill
