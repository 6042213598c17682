#pragma once

// Counter-based random number generation (Philox4x64-10) and derived
// Gaussian streams.
//
// Every stochastic object in the library draws from a PhiloxStream keyed by
// (seed, stream_id).  Streams are stateless functions of their key, so any
// sample can be regenerated in isolation: Monte Carlo workers can run in any
// order, on any number of threads, and still produce bit-identical ensembles.

#include <array>
#include <cmath>
#include <cstdint>

#include "snse/errors.hpp"

namespace snse {

namespace detail {

inline std::uint64_t mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t* hi) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    *hi = static_cast<std::uint64_t>(p >> 64);
    return static_cast<std::uint64_t>(p);
}

} // namespace detail

/// One block of Philox4x64 with 10 rounds: maps a 256-bit counter and a
/// 128-bit key to four 64-bit words.  Constants follow the reference
/// implementation (Salmon et al., "Parallel random numbers: as easy as
/// 1, 2, 3"), so blocks can be cross-checked against numpy.random.Philox.
inline std::array<std::uint64_t, 4> philox4x64_block(std::array<std::uint64_t, 4> ctr,
                                                     std::array<std::uint64_t, 2> key) {
    constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        if (round != 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint64_t hi0 = 0, hi1 = 0;
        const std::uint64_t lo0 = detail::mulhilo64(kMul0, ctr[0], &hi0);
        const std::uint64_t lo1 = detail::mulhilo64(kMul1, ctr[2], &hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Deterministic stream of 64-bit words for key (seed, stream_id).
/// Word i comes from counter block {1 + i/4, 0, 0, 0}; the block index
/// starts at 1 so the raw words line up with numpy.random.Philox, whose
/// generator increments the counter before producing a block.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{seed, stream_id} {}

    std::uint64_t seed() const { return key_[0]; }
    std::uint64_t stream_id() const { return key_[1]; }

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            ++block_;
            buf_ = philox4x64_block({block_, 0, 0, 0}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on consecutive uniform pairs.
    double next_normal() {
        if (have_normal_) {
            have_normal_ = false;
            return spare_normal_;
        }
        // Shift into (0, 1] so the logarithm is finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_normal_ = r * std::sin(a);
        have_normal_ = true;
        return r * std::cos(a);
    }

private:
    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> buf_{};
    std::uint64_t block_ = 0; // last block consumed; 0 means "none yet"
    int pos_ = 4;
    bool have_normal_ = false;
    double spare_normal_ = 0.0;
};

} // namespace snse
