#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ybsde {

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash64(std::uint64_t seed, std::uint64_t index) {
    return mix64(mix64(seed) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Stream tags keep the draws of different consumers of one master seed apart.
enum class StreamTag : std::uint64_t {
    diffusion = 1,
    sheet = 2,
    pilot = 3,
};

/// Philox4x32-10 counter-based generator. One instance is one stream:
/// the key is fixed at construction, the counter advances per block.
class Philox {
public:
    explicit Philox(std::uint64_t key) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

    /// Stream for sample `index` of master seed `seed`, namespaced by `tag`.
    static Philox stream(std::uint64_t seed, std::uint64_t index, StreamTag tag = StreamTag::diffusion) {
        return Philox(hash64(hash64(seed, static_cast<std::uint64_t>(tag)), index));
    }

    std::array<std::uint32_t, 4> next_block() {
        std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
        ++counter_;
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

    /// Uniform in the open interval (0,1), 53-bit resolution.
    double uniform() {
        refill_if_needed();
        const std::uint64_t hi = buf_[pos_++];
        const std::uint64_t lo = buf_[pos_++];
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    void refill_if_needed() {
        if (pos_ + 2 > 4) {
            buf_ = next_block();
            pos_ = 0;
        }
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ybsde
