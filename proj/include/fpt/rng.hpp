#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace fpt {

/// Counter-based splittable random stream (splitmix64 finalizer over a Weyl
/// sequence). Stream k of a master seed sees the same draws no matter how
/// many workers consume the other streams, which is what makes parallel
/// Monte Carlo runs reproducible trajectory-by-trajectory.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
        : state_(mix(master_seed ^ mix(stream_id * 0xA24BAED4963EE407ull
                                       + 0x9E3779B97F4A7C15ull))) {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Exponential with the given rate; +inf when the rate is zero (a clock
    /// that never rings).
    double exponential(double rate) noexcept {
        const double u = uniform();
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        return -std::log1p(-u) / rate;
    }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace fpt
