#include "gridbank/errors.hpp"

#include <array>
#include <utility>

namespace gridbank {

namespace {

struct CodeEntry {
    Errc errc;
    std::string_view code;
};

constexpr std::array<CodeEntry, 50> k_codes{{
    {Errc::DuplicateSubject, "DUPLICATE_SUBJECT"},
    {Errc::NoSuchAccount, "NO_SUCH_ACCOUNT"},
    {Errc::AccountClosed, "ACCOUNT_CLOSED"},
    {Errc::BadRange, "BAD_RANGE"},
    {Errc::NonPositiveAmount, "NON_POSITIVE_AMOUNT"},
    {Errc::NotAdmin, "NOT_ADMIN"},
    {Errc::InsufficientFunds, "INSUFFICIENT_FUNDS"},
    {Errc::WouldViolateBalance, "WOULD_VIOLATE_BALANCE"},
    {Errc::SelfTransfer, "SELF_TRANSFER"},
    {Errc::CurrencyMismatch, "CURRENCY_MISMATCH"},
    {Errc::NoSuchLock, "NO_SUCH_LOCK"},
    {Errc::ExceedsLock, "EXCEEDS_LOCK"},
    {Errc::NoSuchTransfer, "NO_SUCH_TRANSFER"},
    {Errc::AlreadyCancelled, "ALREADY_CANCELLED"},
    {Errc::HasLockedFunds, "HAS_LOCKED_FUNDS"},
    {Errc::NegativeBalance, "NEGATIVE_BALANCE"},
    {Errc::UnknownSubject, "UNKNOWN_SUBJECT"},
    {Errc::BadSignature, "BAD_SIGNATURE"},
    {Errc::UnencodableValue, "UNENCODABLE_VALUE"},
    {Errc::BadMessage, "BAD_MESSAGE"},
    {Errc::NegativeUsage, "NEGATIVE_USAGE"},
    {Errc::ClockSkew, "CLOCK_SKEW"},
    {Errc::EmptyList, "EMPTY_LIST"},
    {Errc::MixedJobs, "MIXED_JOBS"},
    {Errc::MixedRates, "MIXED_RATES"},
    {Errc::RateMismatch, "RATE_MISMATCH"},
    {Errc::ExceedsLimit, "EXCEEDS_LIMIT"},
    {Errc::AlreadyRedeemed, "ALREADY_REDEEMED"},
    {Errc::WrongPayee, "WRONG_PAYEE"},
    {Errc::Expired, "EXPIRED"},
    {Errc::PayeeHasNoAccount, "PAYEE_HAS_NO_ACCOUNT"},
    {Errc::StaleIndex, "STALE_INDEX"},
    {Errc::BadPreimage, "BAD_PREIMAGE"},
    {Errc::IndexOverflow, "INDEX_OVERFLOW"},
    {Errc::BadParameters, "BAD_PARAMETERS"},
    {Errc::UnknownOp, "UNKNOWN_OP"},
    {Errc::SchemaViolation, "SCHEMA_VIOLATION"},
    {Errc::Forbidden, "FORBIDDEN"},
    {Errc::Refused, "REFUSED"},
    {Errc::NoHistory, "NO_HISTORY"},
    {Errc::InvalidInstrument, "INVALID_INSTRUMENT"},
    {Errc::RatesExpired, "RATES_EXPIRED"},
    {Errc::PoolExhausted, "POOL_EXHAUSTED"},
    {Errc::NotActive, "NOT_ACTIVE"},
    {Errc::ChargeExceedsInstrument, "CHARGE_EXCEEDS_INSTRUMENT"},
    {Errc::BankUnreachable, "BANK_UNREACHABLE"},
    {Errc::UnreachableEndpoint, "UNREACHABLE_ENDPOINT"},
    {Errc::BudgetExceeded, "BUDGET_EXCEEDED"},
    {Errc::BelowCommitted, "BELOW_COMMITTED"},
    {Errc::ConfigError, "CONFIG_ERROR"},
}};

static_assert(k_codes.back().code == "CONFIG_ERROR");

} // namespace

std::string_view errc_code(Errc e) noexcept
{
    for (const auto& entry : k_codes) {
        if (entry.errc == e)
            return entry.code;
    }
    return "IO_ERROR"; // Errc::IoError and anything unmapped
}

std::optional<Errc> errc_from_code(std::string_view code) noexcept
{
    for (const auto& entry : k_codes) {
        if (entry.code == code)
            return entry.errc;
    }
    if (code == "IO_ERROR")
        return Errc::IoError;
    return std::nullopt;
}

GridBankError::GridBankError(Errc code, std::string message)
    : std::runtime_error(message.empty() ? std::string(errc_code(code))
                                         : std::string(errc_code(code)) + ": " + message)
    , code_(code)
{
}

void fail(Errc code, std::string message)
{
    throw GridBankError(code, std::move(message));
}

} // namespace gridbank
