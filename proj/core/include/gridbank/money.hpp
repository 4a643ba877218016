#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace gridbank {

/// Exact monetary amount in minor units of 1/1000 of a currency unit.
/// All ledger arithmetic is integer arithmetic on the milli field; the
/// textual form always carries exactly three decimal places ("9.224").
struct Money {
    std::int64_t milli = 0;
    std::string currency = "G$";

    static Money from_milli(std::int64_t milli, std::string currency = "G$");
    static Money zero(std::string currency = "G$") { return from_milli(0, std::move(currency)); }

    /// Parses "12.345" / "-0.5" (at most 3 fractional digits).
    static Money parse(std::string_view text, std::string currency = "G$");

    std::string text() const;

    bool is_zero() const noexcept { return milli == 0; }
    bool positive() const noexcept { return milli > 0; }
    bool negative() const noexcept { return milli < 0; }

    Money operator+(const Money& other) const;
    Money operator-(const Money& other) const;
    Money operator-() const { return {-milli, currency}; }
    Money& operator+=(const Money& other) { return *this = *this + other; }
    Money& operator-=(const Money& other) { return *this = *this - other; }

    /// Scales by an integer count (used for hash-chain link totals).
    Money times(std::int64_t count) const;

    bool operator==(const Money& other) const;
    std::strong_ordering operator<=>(const Money& other) const;
};

/// Fixed-point scalar with 6 fractional digits, used for usage amounts
/// (CPU hours, MB hours, MB) and per-item rates (G$ per unit). Kept as an
/// integer so record encodings and charge arithmetic are exact.
struct Quantity {
    std::int64_t micro = 0;

    static Quantity from_micro(std::int64_t micro) { return Quantity{micro}; }

    /// Parses "3.6" / "0.002" (at most 6 fractional digits).
    static Quantity parse(std::string_view text);

    std::string text() const; // always 6 decimal places

    bool negative() const noexcept { return micro < 0; }
    bool is_zero() const noexcept { return micro == 0; }

    Quantity operator+(Quantity other) const;
    Quantity& operator+=(Quantity other) { return *this = *this + other; }
    Quantity operator-(Quantity other) const;

    auto operator<=>(const Quantity&) const = default;
};

/// usage x rate, rounded half-up to milli currency units.
Money charge_for(Quantity usage, Quantity rate, const std::string& currency);

/// Seconds -> hours, rounded half-up to the micro digit.
Quantity hours_from_seconds(Quantity seconds);

/// charge / cpu_hours -> rate in currency units per hour (half-up to micro).
Quantity rate_per_hour(const Money& charge, Quantity cpu_hours);

} // namespace gridbank
