#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace bpsre {

/// Philox4x32-10 counter-based generator.
///
/// Every stream is addressed by (key, replicate, role); the generator output
/// for a given address depends on nothing else, so any replicate can be
/// regenerated in isolation and worker scheduling cannot change results.
class Philox {
  public:
    using result_type = std::uint64_t;
    using Key = std::array<std::uint32_t, 2>;
    using Counter = std::array<std::uint32_t, 4>;

    Philox(std::uint64_t key, std::uint64_t replicate, std::uint8_t role) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          replicate_(replicate), role_(role) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (used_ == 2) {
            refill();
        }
        const auto lo = block_[2 * used_];
        const auto hi = block_[2 * used_ + 1];
        ++used_;
        return (static_cast<std::uint64_t>(hi) << 32) | lo;
    }

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double on (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    static Counter rounds(Counter ctr, Key key) noexcept;

  private:
    void refill() noexcept;

    Key key_;
    std::uint64_t replicate_;
    std::uint8_t role_;
    std::uint64_t block_index_ = 0;
    Counter block_{};
    int used_ = 2;
};

/// SplitMix64 finalizer, used to mix seeds and tags into Philox keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a over the experiment tag.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

enum class StreamRole : std::uint8_t {
    gaps = 1,
    laws = 2,
    population = 3,
    auxiliary = 4,
};

/// Derives the random streams of one experiment.
class StreamFactory {
  public:
    StreamFactory(std::uint64_t master_seed, std::string_view tag) noexcept
        : key_(mix64(master_seed ^ mix64(hash_tag(tag)))) {}

    Philox stream(std::uint64_t replicate, StreamRole role) const noexcept {
        return Philox(key_, replicate, static_cast<std::uint8_t>(role));
    }

    std::uint64_t key() const noexcept { return key_; }

  private:
    std::uint64_t key_;
};

/// Standard normal variate (ziggurat).
double standard_normal(Philox& rng);

}  // namespace bpsre
