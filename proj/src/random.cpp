#include "blindcrb/random.hpp"

#include <cmath>

namespace blindcrb {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

Philox::result_type Philox::operator()() {
    if (used_ == 4) {
        buf_ = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                             key_);
        ++block_;
        used_ = 0;
    }
    return buf_[static_cast<std::size_t>(used_++)];
}

CVec gaussian_vector(Philox& rng, Index n, double var, Field field) {
    CVec out(n);
    if (field == Field::Real) {
        std::normal_distribution<double> dist(0.0, std::sqrt(var));
        for (Index i = 0; i < n; ++i) out(i) = Complex(dist(rng), 0.0);
    } else {
        std::normal_distribution<double> dist(0.0, std::sqrt(var / 2.0));
        for (Index i = 0; i < n; ++i) {
            const double re = dist(rng);
            out(i) = Complex(re, dist(rng));
        }
    }
    return out;
}

}  // namespace blindcrb
