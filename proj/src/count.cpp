#include "bpsre/count.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bpsre {

Count::Count(BigInt v) {
    if (v < 0) {
        throw std::domain_error("Count: negative value");
    }
    if (v <= std::numeric_limits<std::uint64_t>::max()) {
        rep_ = static_cast<std::uint64_t>(v);
    } else {
        rep_ = std::move(v);
    }
}

BigInt Count::big() const {
    if (const auto* s = std::get_if<std::uint64_t>(&rep_)) {
        return BigInt(*s);
    }
    return std::get<BigInt>(rep_);
}

double Count::to_double() const {
    if (const auto* s = std::get_if<std::uint64_t>(&rep_)) {
        return static_cast<double>(*s);
    }
    return std::get<BigInt>(rep_).convert_to<double>();
}

double Count::log() const {
    if (const auto* s = std::get_if<std::uint64_t>(&rep_)) {
        return std::log(static_cast<double>(*s));
    }
    const auto& b = std::get<BigInt>(rep_);
    // Keep the top 62 bits; the dropped tail changes the log by < 2^-61.
    const auto msb = boost::multiprecision::msb(b);
    const unsigned shift = msb > 61 ? static_cast<unsigned>(msb - 61) : 0U;
    const auto top = static_cast<std::uint64_t>(b >> shift);
    return std::log(static_cast<double>(top)) + static_cast<double>(shift) * std::log(2.0);
}

std::string Count::to_string() const {
    if (const auto* s = std::get_if<std::uint64_t>(&rep_)) {
        return std::to_string(*s);
    }
    return std::get<BigInt>(rep_).str();
}

std::strong_ordering operator<=>(const Count& a, const Count& b) {
    if (a.fits_u64() && b.fits_u64()) {
        return a.u64() <=> b.u64();
    }
    if (a.fits_u64()) {
        return std::strong_ordering::less;
    }
    if (b.fits_u64()) {
        return std::strong_ordering::greater;
    }
    const int c = a.big().compare(b.big());
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

}  // namespace bpsre
