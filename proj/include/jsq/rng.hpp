#pragma once

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <random>

namespace jsq
{
    /// Every engine owns one of these. The mt19937_64 output sequence is fixed by the C++
    /// standard (Boost's implementation is bit-identical to std::mt19937_64, and faster), and
    /// the Boost distributions below are implementation-independent, so a (seed, stream) pair
    /// reproduces the same event sequence on any toolchain.
    using Rng = boost::random::mt19937_64;

    /// Seed for substream `stream` of master seed `seed` (replications, cycles, grid points).
    std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

    inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) { return Rng(derive_seed(seed, stream)); }

    inline double uniform01(Rng& rng) { return boost::random::uniform_01<double>{}(rng); }

    /// Exponential(1) via the ziggurat method.
    inline double exp1(Rng& rng) { return boost::random::exponential_distribution<double>{}(rng); }

    inline double std_normal(Rng& rng) { return boost::random::normal_distribution<double>{}(rng); }
}
