#ifndef BADER_RNG_HPP
#define BADER_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

/**
 * @file rng.hpp
 * @brief Counter-keyed random streams.
 *
 * Every parameter block draws from its own stream, keyed by the run seed, the block id and the iteration.
 * Results therefore do not depend on how blocks are distributed across threads.
 */

namespace bader {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * xoshiro256** generator, satisfying `UniformRandomBitGenerator` so it plugs into the `<random>` distributions.
 */
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : my_state) {
            w = splitmix64(sm);
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(my_state[1] * 5, 7) * 9;
        const std::uint64_t t = my_state[1] << 17;
        my_state[2] ^= my_state[0];
        my_state[3] ^= my_state[1];
        my_state[1] ^= my_state[2];
        my_state[0] ^= my_state[3];
        my_state[2] ^= t;
        my_state[3] = rotl(my_state[3], 45);
        return result;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> my_state{};
};

/**
 * Derive the seed of the substream for (seed, block, iteration).
 */
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t iteration) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    h ^= block * 0xd1b54a32d192ed03ULL;
    h = splitmix64(h);
    h ^= iteration * 0x8cb92ba72f3d8dd7ULL;
    return splitmix64(h);
}

/**
 * A random stream with the handful of variates the samplers need.
 */
class Stream {
public:
    explicit Stream(std::uint64_t seed) : my_engine(seed) {}
    Stream(std::uint64_t seed, std::uint64_t block, std::uint64_t iteration) :
        my_engine(substream_seed(seed, block, iteration)) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        // 53 random bits, offset by half a unit so that 0 is never returned.
        return (static_cast<double>(my_engine() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return my_normal(my_engine); }
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Gamma with the given shape and unit scale.
    double gamma(double shape) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(my_engine);
    }

    std::int64_t poisson(double mean) {
        if (mean <= 0) {
            return 0;
        }
        std::poisson_distribution<std::int64_t> dist(mean);
        return dist(my_engine);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer on {0, ..., n - 1}.
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
        return dist(my_engine);
    }

    Xoshiro256& engine() { return my_engine; }

private:
    Xoshiro256 my_engine;
    std::normal_distribution<double> my_normal{0.0, 1.0};
};

}

#endif
