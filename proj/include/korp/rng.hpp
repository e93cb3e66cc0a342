#ifndef KORP_RNG_HPP
#define KORP_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace korp::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A block is a pure function of (key, counter), so independent streams are
/// just distinct counter lanes: parallel evaluation reproduces serial output
/// exactly. Verified against the Random123 known-answer vectors.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                              std::array<std::uint32_t, 4> ctr) {
        constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }
};

/// One 128-bit block addressed by (seed, stream, index): stream selects an
/// independent lane (e.g. one per oscillator), index counts draws within it.
inline std::array<std::uint32_t, 4> block_at(std::uint64_t seed, std::uint64_t stream,
                                             std::uint64_t index) {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Philox4x32::block(key, ctr);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    // 53-bit mantissa from two words; result in [0, 1).
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

/// Two uniforms in [0,1) from one block.
inline std::array<double, 2> uniform2_at(std::uint64_t seed, std::uint64_t stream,
                                         std::uint64_t index) {
    const auto b = block_at(seed, stream, index);
    return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
}

/// Standard normal via Box-Muller; one draw consumes one block.
inline double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const auto u = uniform2_at(seed, stream, index);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u[0]));
    return r * std::cos(2.0 * M_PI * u[1]);
}

/// Sequential convenience wrapper over one stream.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id), index_(0) {}

    std::uint32_t next_u32() {
        if (have_ == 0) {
            buf_ = block_at(seed_, stream_, index_++);
            have_ = 4;
        }
        return buf_[4 - have_--];
    }

    double uniform01() {
        const std::uint32_t hi = next_u32();
        const std::uint32_t lo = next_u32();
        return to_unit(hi, lo);
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
    }

private:
    std::uint64_t seed_, stream_, index_;
    std::array<std::uint32_t, 4> buf_{};
    int have_ = 0;
};

} // namespace korp::rng

#endif
