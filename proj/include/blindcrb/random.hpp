#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., Random123). Each
// (seed, stream) pair names an independent sequence, so Monte Carlo trials
// are reproducible no matter how they are scheduled.

#include <array>
#include <cstdint>
#include <limits>
#include <random>

#include "blindcrb/linalg.hpp"

namespace blindcrb {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// UniformRandomBitGenerator over the block function: key = seed, counter =
/// (draw index, stream).
class Philox {
public:
    using result_type = std::uint32_t;

    Philox(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

private:
    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxCounter buf_{};
    int used_ = 4;
};

/// Real: N(0, var) entries. Complex: circular, E|x|^2 = var, E[x^2] = 0.
CVec gaussian_vector(Philox& rng, Index n, double var, Field field);

}  // namespace blindcrb
