#include "bpsre/rng.hpp"

#include <boost/random/normal_distribution.hpp>

namespace bpsre {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53U;
constexpr std::uint32_t kMul1 = 0xCD9E8D57U;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9U;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85U;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox::Counter Philox::rounds(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

void Philox::refill() noexcept {
    // 56-bit block index, role in the top byte of the second word.
    const Counter ctr{
        static_cast<std::uint32_t>(block_index_),
        static_cast<std::uint32_t>((block_index_ >> 32) & 0x00FFFFFFU) |
            (static_cast<std::uint32_t>(role_) << 24),
        static_cast<std::uint32_t>(replicate_),
        static_cast<std::uint32_t>(replicate_ >> 32),
    };
    block_ = rounds(ctr, key_);
    ++block_index_;
    used_ = 0;
}

double standard_normal(Philox& rng) {
    boost::random::normal_distribution<double> normal;
    return normal(rng);
}

}  // namespace bpsre
