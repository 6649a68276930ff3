#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>

#include <boost/multiprecision/cpp_int.hpp>

namespace bpsre {

using BigInt = boost::multiprecision::cpp_int;

/// Nonnegative arbitrary-precision population count.
///
/// Values that fit in 64 bits stay in a machine word; larger values spill to
/// a heap-backed big integer. The representation is canonical, so equality
/// is structural.
class Count {
  public:
    Count() noexcept = default;
    Count(std::uint64_t v) noexcept : rep_(v) {}  // NOLINT(google-explicit-constructor)
    explicit Count(BigInt v);

    bool is_zero() const noexcept {
        const auto* s = std::get_if<std::uint64_t>(&rep_);
        return s != nullptr && *s == 0;
    }
    bool fits_u64() const noexcept { return std::holds_alternative<std::uint64_t>(rep_); }

    /// Precondition: fits_u64().
    std::uint64_t u64() const { return std::get<std::uint64_t>(rep_); }
    BigInt big() const;

    double to_double() const;
    /// Natural logarithm; -inf for zero.
    double log() const;
    std::string to_string() const;

    friend bool operator==(const Count& a, const Count& b) = default;
    friend std::strong_ordering operator<=>(const Count& a, const Count& b);

  private:
    std::variant<std::uint64_t, BigInt> rep_{std::uint64_t{0}};
};

}  // namespace bpsre
