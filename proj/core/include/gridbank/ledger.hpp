#pragma once

#include "gridbank/canonical.hpp"
#include "gridbank/journal.hpp"
#include "gridbank/money.hpp"
#include "gridbank/time.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace gridbank {

/// 16-character account number: 2-digit bank, 4-digit branch, 8-digit
/// sequence, hyphen-separated ("01-0001-00000001"). The branch field is
/// carried for forward compatibility; only one branch runs.
class AccountId {
public:
    AccountId() = default;
    static AccountId parse(std::string_view text); // throws BadMessage
    static AccountId make(unsigned bank, unsigned branch, std::uint64_t sequence);

    const std::string& text() const { return text_; }
    bool empty() const { return text_.empty(); }

    auto operator<=>(const AccountId&) const = default;

private:
    explicit AccountId(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

enum class TxnType { Deposit, Withdrawal, Transfer };

std::string_view txn_type_name(TxnType t);
TxnType txn_type_from_name(std::string_view name);

struct Account {
    AccountId account_id;
    std::string certificate_name; // <= 150 chars, unique across open accounts
    std::string organization_name; // <= 30 chars, optional
    Money available_balance;
    Money locked_balance;
    Money credit_limit; // non-negative
    bool closed = false;

    Value to_value() const; // §5.1 field names
};

struct TransactionRecord {
    std::uint64_t transaction_id = 0;
    AccountId account_id;
    TxnType txn_type = TxnType::Deposit;
    Timestamp timestamp = 0;
    Money amount; // negative for withdrawal / outgoing transfer

    Value to_value() const;
};

struct TransferRecord {
    std::uint64_t transaction_id = 0;
    Timestamp timestamp = 0;
    AccountId drawer_account_id;
    Money amount; // always positive
    AccountId recipient_account_id;
    std::string resource_usage_record; // opaque bytes, possibly empty
    bool cancelled = false;

    Value to_value() const;
};

struct Lock {
    std::uint64_t lock_id = 0;
    AccountId account_id;
    Money remaining; // > 0 while live
    Timestamp created = 0;
    std::string purpose;
};

struct StatementResult {
    Account account;
    std::vector<TransactionRecord> transactions;
    std::vector<TransferRecord> transfers;
};

/// Admin-gated entry points carry the caller's access level; the wire layer
/// additionally rejects mis-scoped requests before they reach the ledger.
enum class Access { User, Admin };

/// Authoritative account state and audit trail. Independent of payment
/// scheme and security model. All mutations are validated, applied, and
/// appended to the journal as one event; replaying the journal rebuilds the
/// exact state including every assigned id.
class Ledger {
public:
    Ledger(std::shared_ptr<Clock> clock, std::shared_ptr<Journal> journal,
           std::string currency = "G$");

    // --- account operations ------------------------------------------------
    AccountId create_account(const std::string& certificate_name,
                             const std::string& organization_name, const std::string& currency);
    Account get_account(const AccountId& id) const;
    void update_account(const Account& submitted);
    StatementResult statement(const AccountId& id, Timestamp start, Timestamp end) const;

    std::uint64_t deposit(const AccountId& id, const Money& amount, Access access);
    std::uint64_t withdraw(const AccountId& id, const Money& amount, Access access);
    void set_credit_limit(const AccountId& id, const Money& limit, Access access);
    std::uint64_t transfer(const AccountId& drawer, const AccountId& recipient,
                           const Money& amount, const std::string& rur_blob);
    std::uint64_t lock_funds(const AccountId& id, const Money& amount, const std::string& purpose);
    std::uint64_t transfer_from_locked(std::uint64_t lock_id, const AccountId& recipient,
                                       const Money& amount, const std::string& rur_blob);
    void release_lock(std::uint64_t lock_id);
    std::uint64_t cancel_transfer(std::uint64_t transaction_id, Access access);
    void close_account(const AccountId& id, const AccountId& destination, Access access);

    // --- queries -----------------------------------------------------------
    bool has_open_account_for(const std::string& certificate_name) const;
    std::optional<AccountId> account_for_subject(const std::string& certificate_name) const;
    std::optional<Lock> find_lock(std::uint64_t lock_id) const;
    std::optional<TransferRecord> find_transfer(std::uint64_t transaction_id) const;
    std::vector<Account> accounts() const;
    std::vector<TransferRecord> transfers() const;
    Money total_funds() const; // sum of available + locked over all accounts
    Money total_deposited_minus_withdrawn() const;
    const std::string& currency() const { return currency_; }

    /// Re-applies one journaled event during startup replay.
    void replay_event(const Value& event);
    static bool owns_event(std::string_view record_kind);

    /// Full state as a canonical tree (accounts, locks, history, counters);
    /// the digest of this is the crash-consistency check.
    Value state_value() const;

private:
    struct AccountState;

    const Value& require_map(const Value& event) const;
    void apply_event(const Value& event);
    void commit(const Value& event);

    AccountState& open_account_ref(const AccountId& id);
    const AccountState& open_account_ref(const AccountId& id) const;
    void check_can_draw(const AccountState& account, const Money& amount) const;

    Value transfer_event(std::string_view kind, std::uint64_t txn_id, const AccountId& drawer,
                         const AccountId& recipient, const Money& amount,
                         const std::string& rur_blob) const;

    mutable std::shared_mutex mutex_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<Journal> journal_;
    std::string currency_;

    struct AccountState {
        Account account;
    };

    std::map<AccountId, AccountState> accounts_;
    std::map<std::string, AccountId> subject_index_; // open accounts only
    std::vector<TransactionRecord> transactions_;
    std::map<std::uint64_t, TransferRecord> transfers_by_id_;
    std::map<std::uint64_t, Lock> locks_;
    std::uint64_t next_transaction_id_ = 1;
    std::uint64_t next_lock_id_ = 1;
    std::uint64_t next_account_sequence_ = 1;
};

} // namespace gridbank
