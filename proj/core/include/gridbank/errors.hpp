#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridbank {

// Stable error codes. The string form (errc_code) is part of the wire
// contract and must never change for an existing member.
enum class Errc {
    DuplicateSubject,
    NoSuchAccount,
    AccountClosed,
    BadRange,
    NonPositiveAmount,
    NotAdmin,
    InsufficientFunds,
    WouldViolateBalance,
    SelfTransfer,
    CurrencyMismatch,
    NoSuchLock,
    ExceedsLock,
    NoSuchTransfer,
    AlreadyCancelled,
    HasLockedFunds,
    NegativeBalance,
    UnknownSubject,
    BadSignature,
    UnencodableValue,
    BadMessage,
    NegativeUsage,
    ClockSkew,
    EmptyList,
    MixedJobs,
    MixedRates,
    RateMismatch,
    ExceedsLimit,
    AlreadyRedeemed,
    WrongPayee,
    Expired,
    PayeeHasNoAccount,
    StaleIndex,
    BadPreimage,
    IndexOverflow,
    BadParameters,
    UnknownOp,
    SchemaViolation,
    Forbidden,
    Refused,
    NoHistory,
    InvalidInstrument,
    RatesExpired,
    PoolExhausted,
    NotActive,
    ChargeExceedsInstrument,
    BankUnreachable,
    UnreachableEndpoint,
    BudgetExceeded,
    BelowCommitted,
    ConfigError,
    IoError,
};

std::string_view errc_code(Errc e) noexcept;
std::optional<Errc> errc_from_code(std::string_view code) noexcept;

class GridBankError : public std::runtime_error {
public:
    explicit GridBankError(Errc code, std::string message = {});
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, std::string message = {});

} // namespace gridbank
