#include "gridbank/ledger.hpp"

#include "gridbank/crypto.hpp"
#include "gridbank/errors.hpp"

#include <algorithm>
#include <cstdio>

namespace gridbank {

namespace {

constexpr std::size_t k_max_subject_len = 150;
constexpr std::size_t k_max_org_len = 30;

void check_subject(const std::string& subject)
{
    if (subject.empty() || subject.size() > k_max_subject_len)
        fail(Errc::BadParameters, "certificate name must be 1..150 chars");
}

void check_org(const std::string& org)
{
    if (org.size() > k_max_org_len)
        fail(Errc::BadParameters, "organization name over 30 chars");
}

} // namespace

AccountId AccountId::parse(std::string_view text)
{
    if (text.size() != 16 || text[2] != '-' || text[7] != '-')
        fail(Errc::BadMessage, "malformed account id '" + std::string(text) + "'");
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i == 2 || i == 7)
            continue;
        if (text[i] < '0' || text[i] > '9')
            fail(Errc::BadMessage, "malformed account id '" + std::string(text) + "'");
    }
    return AccountId(std::string(text));
}

AccountId AccountId::make(unsigned bank, unsigned branch, std::uint64_t sequence)
{
    if (bank > 99 || branch > 9999 || sequence > 99'999'999)
        fail(Errc::BadParameters, "account id component out of range");
    char buf[20];
    std::snprintf(buf, sizeof buf, "%02u-%04u-%08llu", bank, branch,
                  static_cast<unsigned long long>(sequence));
    return AccountId(buf);
}

std::string_view txn_type_name(TxnType t)
{
    switch (t) {
    case TxnType::Deposit: return "Deposit";
    case TxnType::Withdrawal: return "Withdrawal";
    case TxnType::Transfer: return "Transfer";
    }
    return "Transfer";
}

TxnType txn_type_from_name(std::string_view name)
{
    if (name == "Deposit")
        return TxnType::Deposit;
    if (name == "Withdrawal")
        return TxnType::Withdrawal;
    if (name == "Transfer")
        return TxnType::Transfer;
    fail(Errc::BadMessage, "unknown transaction type '" + std::string(name) + "'");
}

Value Account::to_value() const
{
    Value v = Value::map();
    v.set("AccountID", account_id.text());
    v.set("CertificateName", certificate_name);
    v.set("OrganizationName", organization_name);
    v.set("AvailableBalance", available_balance.text());
    v.set("LockedBalance", locked_balance.text());
    v.set("Currency", available_balance.currency);
    v.set("CreditLimit", credit_limit.text());
    return v;
}

Value TransactionRecord::to_value() const
{
    Value v = Value::map();
    v.set("TransactionID", static_cast<std::int64_t>(transaction_id));
    v.set("AccountID", account_id.text());
    v.set("Type", std::string(txn_type_name(txn_type)));
    v.set("Date", format_timestamp(timestamp));
    v.set("Amount", amount.text());
    return v;
}

Value TransferRecord::to_value() const
{
    Value v = Value::map();
    v.set("TransactionID", static_cast<std::int64_t>(transaction_id));
    v.set("Date", format_timestamp(timestamp));
    v.set("DrawerAccountID", drawer_account_id.text());
    v.set("Amount", amount.text());
    v.set("RecipientAccountID", recipient_account_id.text());
    v.set("ResourceUsageRecord",
          base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(
                                      resource_usage_record.data()),
                                  resource_usage_record.size())));
    v.set("Cancelled", cancelled ? 1 : 0);
    return v;
}

Ledger::Ledger(std::shared_ptr<Clock> clock, std::shared_ptr<Journal> journal,
               std::string currency)
    : clock_(std::move(clock))
    , journal_(std::move(journal))
    , currency_(std::move(currency))
{
    if (!clock_ || !journal_)
        fail(Errc::ConfigError, "ledger needs a clock and a journal");
}

// --- event application -------------------------------------------------------

bool Ledger::owns_event(std::string_view record_kind)
{
    return record_kind == "AccountOpened" || record_kind == "AccountUpdated" ||
           record_kind == "Deposited" || record_kind == "Withdrew" ||
           record_kind == "CreditLimitSet" || record_kind == "Transferred" ||
           record_kind == "FundsLocked" || record_kind == "LockReleased" ||
           record_kind == "TransferCancelled" || record_kind == "AccountClosed";
}

void Ledger::replay_event(const Value& event)
{
    std::unique_lock lock(mutex_);
    apply_event(event);
}

void Ledger::commit(const Value& event)
{
    apply_event(event);
    journal_->append(event);
}

void Ledger::apply_event(const Value& event)
{
    const std::string& kind = event.string_at("Record");

    if (kind == "AccountOpened") {
        AccountId id = AccountId::parse(event.string_at("AccountID"));
        std::string currency = event.string_at("Currency");
        AccountState state;
        state.account.account_id = id;
        state.account.certificate_name = event.string_at("CertificateName");
        state.account.organization_name = event.string_at("OrganizationName");
        state.account.available_balance = Money::zero(currency);
        state.account.locked_balance = Money::zero(currency);
        state.account.credit_limit = Money::zero(currency);
        subject_index_.emplace(state.account.certificate_name, id);
        accounts_.emplace(id, std::move(state));
        std::uint64_t seq = std::stoull(id.text().substr(8));
        next_account_sequence_ = std::max(next_account_sequence_, seq + 1);
        return;
    }
    if (kind == "AccountUpdated") {
        AccountState& state = open_account_ref(AccountId::parse(event.string_at("AccountID")));
        subject_index_.erase(state.account.certificate_name);
        state.account.certificate_name = event.string_at("CertificateName");
        state.account.organization_name = event.string_at("OrganizationName");
        subject_index_.emplace(state.account.certificate_name, state.account.account_id);
        return;
    }
    if (kind == "Deposited" || kind == "Withdrew") {
        AccountState& state = open_account_ref(AccountId::parse(event.string_at("AccountID")));
        Money amount = Money::parse(event.string_at("Amount"),
                                    state.account.available_balance.currency);
        std::uint64_t txn_id = static_cast<std::uint64_t>(event.int_at("TransactionID"));
        Timestamp ts = parse_timestamp(event.string_at("Date"));
        state.account.available_balance += amount;
        transactions_.push_back({txn_id, state.account.account_id,
                                 kind == "Deposited" ? TxnType::Deposit : TxnType::Withdrawal, ts,
                                 amount});
        next_transaction_id_ = std::max(next_transaction_id_, txn_id + 1);
        return;
    }
    if (kind == "CreditLimitSet") {
        AccountState& state = open_account_ref(AccountId::parse(event.string_at("AccountID")));
        state.account.credit_limit =
            Money::parse(event.string_at("CreditLimit"), state.account.credit_limit.currency);
        return;
    }
    if (kind == "Transferred" || kind == "TransferCancelled") {
        AccountId drawer_id = AccountId::parse(event.string_at("DrawerAccountID"));
        AccountId recipient_id = AccountId::parse(event.string_at("RecipientAccountID"));
        AccountState& drawer = open_account_ref(drawer_id);
        AccountState& recipient = open_account_ref(recipient_id);
        Money amount =
            Money::parse(event.string_at("Amount"), drawer.account.available_balance.currency);
        std::uint64_t txn_id = static_cast<std::uint64_t>(event.int_at("TransactionID"));
        Timestamp ts = parse_timestamp(event.string_at("Date"));

        if (const Value* lock_field = event.find("LockID")) {
            auto lock_it = locks_.find(static_cast<std::uint64_t>(lock_field->as_int()));
            if (lock_it == locks_.end())
                fail(Errc::BadMessage, "transfer event names a dead lock");
            lock_it->second.remaining -= amount;
            drawer.account.locked_balance -= amount;
            if (lock_it->second.remaining.is_zero())
                locks_.erase(lock_it);
        } else {
            drawer.account.available_balance -= amount;
        }
        recipient.account.available_balance += amount;

        std::string rur;
        if (const Value* blob = event.find("ResourceUsageRecord")) {
            Bytes raw = base64_decode(blob->as_string());
            rur.assign(raw.begin(), raw.end());
        }
        transactions_.push_back({txn_id, drawer_id, TxnType::Transfer, ts, -amount});
        transactions_.push_back({txn_id, recipient_id, TxnType::Transfer, ts, amount});
        transfers_by_id_.emplace(
            txn_id, TransferRecord{txn_id, ts, drawer_id, amount, recipient_id, rur, false});
        next_transaction_id_ = std::max(next_transaction_id_, txn_id + 1);

        if (kind == "TransferCancelled") {
            auto orig = transfers_by_id_.find(
                static_cast<std::uint64_t>(event.int_at("CancelsTransactionID")));
            if (orig == transfers_by_id_.end())
                fail(Errc::BadMessage, "cancellation names an unknown transfer");
            orig->second.cancelled = true;
        }
        return;
    }
    if (kind == "FundsLocked") {
        AccountState& state = open_account_ref(AccountId::parse(event.string_at("AccountID")));
        Money amount =
            Money::parse(event.string_at("Amount"), state.account.available_balance.currency);
        std::uint64_t lock_id = static_cast<std::uint64_t>(event.int_at("LockID"));
        state.account.available_balance -= amount;
        state.account.locked_balance += amount;
        locks_.emplace(lock_id,
                       Lock{lock_id, state.account.account_id, amount,
                            parse_timestamp(event.string_at("Date")),
                            event.string_at("Purpose")});
        next_lock_id_ = std::max(next_lock_id_, lock_id + 1);
        return;
    }
    if (kind == "LockReleased") {
        auto it = locks_.find(static_cast<std::uint64_t>(event.int_at("LockID")));
        if (it == locks_.end())
            fail(Errc::BadMessage, "release names a dead lock");
        AccountState& state = open_account_ref(it->second.account_id);
        state.account.available_balance += it->second.remaining;
        state.account.locked_balance -= it->second.remaining;
        locks_.erase(it);
        return;
    }
    if (kind == "AccountClosed") {
        AccountState& state = open_account_ref(AccountId::parse(event.string_at("AccountID")));
        subject_index_.erase(state.account.certificate_name);
        state.account.closed = true;
        return;
    }
    fail(Errc::BadMessage, "unknown ledger event '" + kind + "'");
}

// --- helpers -----------------------------------------------------------------

Ledger::AccountState& Ledger::open_account_ref(const AccountId& id)
{
    auto it = accounts_.find(id);
    if (it == accounts_.end() || it->second.account.closed)
        fail(Errc::NoSuchAccount, id.text());
    return it->second;
}

const Ledger::AccountState& Ledger::open_account_ref(const AccountId& id) const
{
    return const_cast<Ledger*>(this)->open_account_ref(id);
}

void Ledger::check_can_draw(const AccountState& state, const Money& amount) const
{
    Money after = state.account.available_balance - amount;
    if (after < -state.account.credit_limit)
        fail(Errc::InsufficientFunds,
             state.account.account_id.text() + " available " +
                 state.account.available_balance.text());
}

Value Ledger::transfer_event(std::string_view kind, std::uint64_t txn_id, const AccountId& drawer,
                             const AccountId& recipient, const Money& amount,
                             const std::string& rur_blob) const
{
    Value event = Value::map();
    event.set("Record", std::string(kind));
    event.set("TransactionID", static_cast<std::int64_t>(txn_id));
    event.set("Date", format_timestamp(clock_->now()));
    event.set("DrawerAccountID", drawer.text());
    event.set("Amount", amount.text());
    event.set("RecipientAccountID", recipient.text());
    event.set("ResourceUsageRecord",
              base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(rur_blob.data()),
                                      rur_blob.size())));
    return event;
}

// --- operations ----------------------------------------------------------------

AccountId Ledger::create_account(const std::string& certificate_name,
                                 const std::string& organization_name,
                                 const std::string& currency)
{
    check_subject(certificate_name);
    check_org(organization_name);
    Money::zero(currency); // validates the code

    std::unique_lock lock(mutex_);
    if (subject_index_.contains(certificate_name))
        fail(Errc::DuplicateSubject, certificate_name);

    AccountId id = AccountId::make(1, 1, next_account_sequence_);
    Value event = Value::map();
    event.set("Record", "AccountOpened");
    event.set("AccountID", id.text());
    event.set("CertificateName", certificate_name);
    event.set("OrganizationName", organization_name);
    event.set("Currency", currency);
    event.set("Date", format_timestamp(clock_->now()));
    commit(event);
    return id;
}

Account Ledger::get_account(const AccountId& id) const
{
    std::shared_lock lock(mutex_);
    return open_account_ref(id).account;
}

void Ledger::update_account(const Account& submitted)
{
    check_subject(submitted.certificate_name);
    check_org(submitted.organization_name);

    std::unique_lock lock(mutex_);
    AccountState& state = open_account_ref(submitted.account_id);
    auto held = subject_index_.find(submitted.certificate_name);
    if (held != subject_index_.end() && held->second != submitted.account_id)
        fail(Errc::DuplicateSubject, submitted.certificate_name);

    // Only the two identity fields change; submitted balances are ignored.
    Value event = Value::map();
    event.set("Record", "AccountUpdated");
    event.set("AccountID", state.account.account_id.text());
    event.set("CertificateName", submitted.certificate_name);
    event.set("OrganizationName", submitted.organization_name);
    commit(event);
}

StatementResult Ledger::statement(const AccountId& id, Timestamp start, Timestamp end) const
{
    if (start > end)
        fail(Errc::BadRange, "start after end");

    std::shared_lock lock(mutex_);
    auto it = accounts_.find(id);
    if (it == accounts_.end())
        fail(Errc::NoSuchAccount, id.text());

    StatementResult result;
    result.account = it->second.account;
    for (const auto& txn : transactions_) {
        if (txn.account_id == id && txn.timestamp >= start && txn.timestamp <= end)
            result.transactions.push_back(txn);
    }
    std::stable_sort(result.transactions.begin(), result.transactions.end(),
                     [](const TransactionRecord& a, const TransactionRecord& b) {
                         if (a.timestamp != b.timestamp)
                             return a.timestamp < b.timestamp;
                         return a.transaction_id < b.transaction_id;
                     });
    for (const auto& txn : result.transactions) {
        if (txn.txn_type != TxnType::Transfer)
            continue;
        auto xfer = transfers_by_id_.find(txn.transaction_id);
        if (xfer != transfers_by_id_.end() &&
            (result.transfers.empty() ||
             result.transfers.back().transaction_id != txn.transaction_id))
            result.transfers.push_back(xfer->second);
    }
    return result;
}

std::uint64_t Ledger::deposit(const AccountId& id, const Money& amount, Access access)
{
    if (access != Access::Admin)
        fail(Errc::NotAdmin);
    if (!amount.positive())
        fail(Errc::NonPositiveAmount);

    std::unique_lock lock(mutex_);
    AccountState& state = open_account_ref(id);
    (void)(state.account.available_balance + amount); // currency check

    std::uint64_t txn_id = next_transaction_id_;
    Value event = Value::map();
    event.set("Record", "Deposited");
    event.set("TransactionID", static_cast<std::int64_t>(txn_id));
    event.set("AccountID", id.text());
    event.set("Date", format_timestamp(clock_->now()));
    event.set("Amount", amount.text());
    commit(event);
    return txn_id;
}

std::uint64_t Ledger::withdraw(const AccountId& id, const Money& amount, Access access)
{
    if (access != Access::Admin)
        fail(Errc::NotAdmin);
    if (!amount.positive())
        fail(Errc::NonPositiveAmount);

    std::unique_lock lock(mutex_);
    AccountState& state = open_account_ref(id);
    check_can_draw(state, amount);

    std::uint64_t txn_id = next_transaction_id_;
    Value event = Value::map();
    event.set("Record", "Withdrew");
    event.set("TransactionID", static_cast<std::int64_t>(txn_id));
    event.set("AccountID", id.text());
    event.set("Date", format_timestamp(clock_->now()));
    event.set("Amount", (-amount).text());
    commit(event);
    return txn_id;
}

void Ledger::set_credit_limit(const AccountId& id, const Money& limit, Access access)
{
    if (access != Access::Admin)
        fail(Errc::NotAdmin);
    if (limit.negative())
        fail(Errc::BadParameters, "credit limit must be non-negative");

    std::unique_lock lock(mutex_);
    AccountState& state = open_account_ref(id);
    if (state.account.available_balance < -limit)
        fail(Errc::WouldViolateBalance,
             "available " + state.account.available_balance.text() + " below -" + limit.text());

    Value event = Value::map();
    event.set("Record", "CreditLimitSet");
    event.set("AccountID", id.text());
    event.set("CreditLimit", limit.text());
    commit(event);
}

std::uint64_t Ledger::transfer(const AccountId& drawer, const AccountId& recipient,
                               const Money& amount, const std::string& rur_blob)
{
    if (!amount.positive())
        fail(Errc::NonPositiveAmount, "transfer amount must be positive");
    if (drawer == recipient)
        fail(Errc::SelfTransfer);

    std::unique_lock lock(mutex_);
    AccountState& from = open_account_ref(drawer);
    AccountState& to = open_account_ref(recipient);
    if (from.account.available_balance.currency != to.account.available_balance.currency ||
        from.account.available_balance.currency != amount.currency)
        fail(Errc::CurrencyMismatch);
    check_can_draw(from, amount);

    std::uint64_t txn_id = next_transaction_id_;
    commit(transfer_event("Transferred", txn_id, drawer, recipient, amount, rur_blob));
    return txn_id;
}

std::uint64_t Ledger::lock_funds(const AccountId& id, const Money& amount,
                                 const std::string& purpose)
{
    if (!amount.positive())
        fail(Errc::NonPositiveAmount);

    std::unique_lock lock(mutex_);
    AccountState& state = open_account_ref(id);
    (void)(state.account.available_balance + amount); // currency check
    check_can_draw(state, amount);

    std::uint64_t lock_id = next_lock_id_;
    Value event = Value::map();
    event.set("Record", "FundsLocked");
    event.set("LockID", static_cast<std::int64_t>(lock_id));
    event.set("AccountID", id.text());
    event.set("Amount", amount.text());
    event.set("Date", format_timestamp(clock_->now()));
    event.set("Purpose", purpose);
    commit(event);
    return lock_id;
}

std::uint64_t Ledger::transfer_from_locked(std::uint64_t lock_id, const AccountId& recipient,
                                           const Money& amount, const std::string& rur_blob)
{
    std::unique_lock lock(mutex_);
    auto it = locks_.find(lock_id);
    if (it == locks_.end())
        fail(Errc::NoSuchLock, std::to_string(lock_id));
    if (!amount.positive())
        fail(Errc::NonPositiveAmount);
    if (amount > it->second.remaining)
        fail(Errc::ExceedsLock,
             amount.text() + " exceeds lock remainder " + it->second.remaining.text());
    if (it->second.account_id == recipient)
        fail(Errc::SelfTransfer);
    open_account_ref(recipient); // NoSuchAccount when closed/missing

    std::uint64_t txn_id = next_transaction_id_;
    Value event =
        transfer_event("Transferred", txn_id, it->second.account_id, recipient, amount, rur_blob);
    event.set("LockID", static_cast<std::int64_t>(lock_id));
    commit(event);
    return txn_id;
}

void Ledger::release_lock(std::uint64_t lock_id)
{
    std::unique_lock lock(mutex_);
    if (!locks_.contains(lock_id))
        fail(Errc::NoSuchLock, std::to_string(lock_id));

    Value event = Value::map();
    event.set("Record", "LockReleased");
    event.set("LockID", static_cast<std::int64_t>(lock_id));
    commit(event);
}

std::uint64_t Ledger::cancel_transfer(std::uint64_t transaction_id, Access access)
{
    if (access != Access::Admin)
        fail(Errc::NotAdmin);

    std::unique_lock lock(mutex_);
    auto it = transfers_by_id_.find(transaction_id);
    if (it == transfers_by_id_.end())
        fail(Errc::NoSuchTransfer, std::to_string(transaction_id));
    if (it->second.cancelled)
        fail(Errc::AlreadyCancelled, std::to_string(transaction_id));

    const TransferRecord& original = it->second;
    AccountState& payer = open_account_ref(original.recipient_account_id);
    open_account_ref(original.drawer_account_id);
    check_can_draw(payer, original.amount);

    // Compensating entry; history is append-only.
    std::uint64_t txn_id = next_transaction_id_;
    Value event = transfer_event("TransferCancelled", txn_id, original.recipient_account_id,
                                 original.drawer_account_id, original.amount, {});
    event.set("CancelsTransactionID", static_cast<std::int64_t>(transaction_id));
    commit(event);
    return txn_id;
}

void Ledger::close_account(const AccountId& id, const AccountId& destination, Access access)
{
    if (access != Access::Admin)
        fail(Errc::NotAdmin);
    if (id == destination)
        fail(Errc::BadParameters, "destination must differ");

    std::unique_lock lock(mutex_);
    AccountState& state = open_account_ref(id);
    if (!state.account.locked_balance.is_zero())
        fail(Errc::HasLockedFunds, state.account.locked_balance.text());
    if (state.account.available_balance.negative())
        fail(Errc::NegativeBalance, state.account.available_balance.text());
    open_account_ref(destination);

    Money residual = state.account.available_balance;
    if (residual.positive())
        commit(transfer_event("Transferred", next_transaction_id_, id, destination, residual, {}));

    Value event = Value::map();
    event.set("Record", "AccountClosed");
    event.set("AccountID", id.text());
    event.set("DestinationAccountID", destination.text());
    event.set("Date", format_timestamp(clock_->now()));
    commit(event);
}

// --- queries -------------------------------------------------------------------

bool Ledger::has_open_account_for(const std::string& certificate_name) const
{
    std::shared_lock lock(mutex_);
    return subject_index_.contains(certificate_name);
}

std::optional<AccountId> Ledger::account_for_subject(const std::string& certificate_name) const
{
    std::shared_lock lock(mutex_);
    auto it = subject_index_.find(certificate_name);
    if (it == subject_index_.end())
        return std::nullopt;
    return it->second;
}

std::optional<Lock> Ledger::find_lock(std::uint64_t lock_id) const
{
    std::shared_lock lock(mutex_);
    auto it = locks_.find(lock_id);
    if (it == locks_.end())
        return std::nullopt;
    return it->second;
}

std::optional<TransferRecord> Ledger::find_transfer(std::uint64_t transaction_id) const
{
    std::shared_lock lock(mutex_);
    auto it = transfers_by_id_.find(transaction_id);
    if (it == transfers_by_id_.end())
        return std::nullopt;
    return it->second;
}

std::vector<Account> Ledger::accounts() const
{
    std::shared_lock lock(mutex_);
    std::vector<Account> out;
    out.reserve(accounts_.size());
    for (const auto& [id, state] : accounts_)
        out.push_back(state.account);
    return out;
}

std::vector<TransferRecord> Ledger::transfers() const
{
    std::shared_lock lock(mutex_);
    std::vector<TransferRecord> out;
    out.reserve(transfers_by_id_.size());
    for (const auto& [id, record] : transfers_by_id_)
        out.push_back(record);
    return out;
}

Money Ledger::total_funds() const
{
    std::shared_lock lock(mutex_);
    Money total = Money::zero(currency_);
    for (const auto& [id, state] : accounts_) {
        if (state.account.available_balance.currency != currency_)
            continue;
        total += state.account.available_balance;
        total += state.account.locked_balance;
    }
    return total;
}

Money Ledger::total_deposited_minus_withdrawn() const
{
    std::shared_lock lock(mutex_);
    Money total = Money::zero(currency_);
    for (const auto& txn : transactions_) {
        if (txn.amount.currency != currency_ || txn.txn_type == TxnType::Transfer)
            continue;
        total += txn.amount;
    }
    return total;
}

Value Ledger::state_value() const
{
    std::shared_lock lock(mutex_);
    Value accounts = Value::list();
    for (const auto& [id, state] : accounts_) {
        Value v = state.account.to_value();
        v.set("Closed", state.account.closed ? 1 : 0);
        accounts.push(std::move(v));
    }
    Value locks = Value::list();
    for (const auto& [id, l] : locks_) {
        Value v = Value::map();
        v.set("LockID", static_cast<std::int64_t>(l.lock_id));
        v.set("AccountID", l.account_id.text());
        v.set("Amount", l.remaining.text());
        v.set("Date", format_timestamp(l.created));
        v.set("Purpose", l.purpose);
        locks.push(std::move(v));
    }
    Value transactions = Value::list();
    for (const auto& txn : transactions_)
        transactions.push(txn.to_value());
    Value transfers = Value::list();
    for (const auto& [id, record] : transfers_by_id_)
        transfers.push(record.to_value());

    Value state = Value::map();
    state.set("Accounts", std::move(accounts));
    state.set("Locks", std::move(locks));
    state.set("Transactions", std::move(transactions));
    state.set("Transfers", std::move(transfers));
    state.set("NextTransactionID", static_cast<std::int64_t>(next_transaction_id_));
    state.set("NextLockID", static_cast<std::int64_t>(next_lock_id_));
    state.set("NextAccountSequence", static_cast<std::int64_t>(next_account_sequence_));
    return state;
}

} // namespace gridbank
