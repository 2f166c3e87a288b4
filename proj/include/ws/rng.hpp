#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ws::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Splittable seeding: stream k of a master seed. Used to give every pipeline
// stage (and every sample inside a parallel kernel) its own generator, so
// rerunning or reordering one consumer never perturbs another.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream ^ 0xA0761D6478BD642Full));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// Uniform in [0,1) with 53 random bits. std::uniform_real_distribution is not
// bit-portable across standard libraries; this is.
inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes exactly two engine draws.
inline double normal(Engine& g) {
    const double u1 = uniform01(g);
    const double u2 = uniform01(g);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform index in [0, n). Modulo bias is below 2^-50 for the sizes used here
// and the scheme is fully deterministic.
inline std::size_t uniform_index(Engine& g, std::size_t n) {
    return static_cast<std::size_t>(g() % static_cast<std::uint64_t>(n));
}

} // namespace ws::rng
