#include "gridbank/money.hpp"

#include "gridbank/errors.hpp"

#include <cctype>
#include <cstdio>
#include <limits>

namespace gridbank {

namespace {

constexpr std::size_t k_max_currency_len = 10;

// Parses a signed fixed-point decimal with at most `frac_digits` fractional
// digits into an integer scaled by 10^frac_digits.
std::int64_t parse_fixed(std::string_view text, int frac_digits, Errc on_error)
{
    if (text.empty())
        fail(on_error, "empty amount");

    std::size_t pos = 0;
    bool negative = false;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        pos = 1;
    }
    if (pos == text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
        fail(on_error, "malformed amount '" + std::string(text) + "'");

    std::int64_t units = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        int digit = text[pos] - '0';
        if (units > (std::numeric_limits<std::int64_t>::max() - digit) / 10)
            fail(on_error, "amount out of range");
        units = units * 10 + digit;
        ++pos;
    }

    std::int64_t frac = 0;
    int seen = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        if (pos == text.size())
            fail(on_error, "trailing decimal point");
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (seen == frac_digits)
                fail(on_error, "too many fractional digits");
            frac = frac * 10 + (text[pos] - '0');
            ++seen;
            ++pos;
        }
    }
    if (pos != text.size())
        fail(on_error, "malformed amount '" + std::string(text) + "'");

    for (; seen < frac_digits; ++seen)
        frac *= 10;

    std::int64_t scale = 1;
    for (int i = 0; i < frac_digits; ++i)
        scale *= 10;
    if (units > (std::numeric_limits<std::int64_t>::max() - frac) / scale)
        fail(on_error, "amount out of range");

    std::int64_t scaled = units * scale + frac;
    return negative ? -scaled : scaled;
}

std::string render_fixed(std::int64_t scaled, int frac_digits)
{
    std::int64_t scale = 1;
    for (int i = 0; i < frac_digits; ++i)
        scale *= 10;

    bool negative = scaled < 0;
    // Avoid overflow on INT64_MIN by splitting before negation.
    std::uint64_t magnitude = negative
        ? static_cast<std::uint64_t>(-(scaled + 1)) + 1
        : static_cast<std::uint64_t>(scaled);
    std::uint64_t units = magnitude / static_cast<std::uint64_t>(scale);
    std::uint64_t frac = magnitude % static_cast<std::uint64_t>(scale);

    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%llu.%0*llu", negative ? "-" : "",
                  static_cast<unsigned long long>(units), frac_digits,
                  static_cast<unsigned long long>(frac));
    return buf;
}

// Rounds a non-negative 128-bit numerator divided by `div`, half-up.
std::int64_t div_half_up(__int128 numerator, std::int64_t div)
{
    __int128 q = (numerator + div / 2) / div;
    if (q > std::numeric_limits<std::int64_t>::max())
        fail(Errc::BadParameters, "amount out of range");
    return static_cast<std::int64_t>(q);
}

} // namespace

Money Money::from_milli(std::int64_t milli, std::string currency)
{
    if (currency.empty() || currency.size() > k_max_currency_len)
        fail(Errc::BadParameters, "bad currency code");
    return Money{milli, std::move(currency)};
}

Money Money::parse(std::string_view text, std::string currency)
{
    return from_milli(parse_fixed(text, 3, Errc::BadMessage), std::move(currency));
}

std::string Money::text() const
{
    return render_fixed(milli, 3);
}

Money Money::operator+(const Money& other) const
{
    if (currency != other.currency)
        fail(Errc::CurrencyMismatch, currency + " vs " + other.currency);
    return {milli + other.milli, currency};
}

Money Money::operator-(const Money& other) const
{
    if (currency != other.currency)
        fail(Errc::CurrencyMismatch, currency + " vs " + other.currency);
    return {milli - other.milli, currency};
}

Money Money::times(std::int64_t count) const
{
    if (count < 0)
        fail(Errc::BadParameters, "negative multiplier");
    __int128 product = static_cast<__int128>(milli) * count;
    if (product > std::numeric_limits<std::int64_t>::max() ||
        product < std::numeric_limits<std::int64_t>::min())
        fail(Errc::BadParameters, "amount out of range");
    return {static_cast<std::int64_t>(product), currency};
}

bool Money::operator==(const Money& other) const
{
    if (currency != other.currency)
        fail(Errc::CurrencyMismatch, currency + " vs " + other.currency);
    return milli == other.milli;
}

std::strong_ordering Money::operator<=>(const Money& other) const
{
    if (currency != other.currency)
        fail(Errc::CurrencyMismatch, currency + " vs " + other.currency);
    return milli <=> other.milli;
}

Quantity Quantity::parse(std::string_view text)
{
    return Quantity{parse_fixed(text, 6, Errc::BadMessage)};
}

std::string Quantity::text() const
{
    return render_fixed(micro, 6);
}

Quantity Quantity::operator+(Quantity other) const
{
    return Quantity{micro + other.micro};
}

Quantity Quantity::operator-(Quantity other) const
{
    return Quantity{micro - other.micro};
}

Money charge_for(Quantity usage, Quantity rate, const std::string& currency)
{
    if (usage.negative() || rate.negative())
        fail(Errc::NegativeUsage);
    // usage(1e-6) * rate(1e-6 G$) = 1e-12 G$; milli units divide by 1e9.
    __int128 numerator = static_cast<__int128>(usage.micro) * rate.micro;
    return Money::from_milli(div_half_up(numerator, 1'000'000'000), currency);
}

Quantity hours_from_seconds(Quantity seconds)
{
    if (seconds.negative())
        fail(Errc::NegativeUsage);
    return Quantity{(seconds.micro + 1800) / 3600};
}

Quantity rate_per_hour(const Money& charge, Quantity cpu_hours)
{
    if (cpu_hours.micro <= 0)
        fail(Errc::BadParameters, "non-positive divisor");
    if (charge.milli < 0)
        fail(Errc::BadParameters, "negative charge");
    // milli G$ -> micro (G$/hour): c/1000 / (u/1e6) scaled by 1e6.
    __int128 numerator = static_cast<__int128>(charge.milli) * 1'000'000'000;
    return Quantity{div_half_up(numerator, cpu_hours.micro)};
}

} // namespace gridbank
