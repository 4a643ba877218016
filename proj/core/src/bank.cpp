#include "gridbank/bank.hpp"

#include "gridbank/errors.hpp"
#include "gridbank/wire.hpp"

namespace gridbank {

namespace {

std::string blob_from_b64(const std::string& b64)
{
    Bytes raw = base64_decode(b64);
    return std::string(raw.begin(), raw.end());
}

/// Strict param reader: typed getters mark fields consumed; done() rejects
/// anything left over. Every failure is a SchemaViolation so malformed
/// requests never reach the ledger.
class Params {
public:
    explicit Params(const Value& params) : params_(params)
    {
        if (!params.is_map())
            fail(Errc::SchemaViolation, "Params must be a map");
    }

    std::string str(std::string_view key) { return need(key).as_string(); }

    std::string str_or(std::string_view key, std::string fallback)
    {
        const Value* v = take(key);
        return v != nullptr ? v->as_string() : std::move(fallback);
    }

    std::int64_t integer(std::string_view key)
    {
        const Value& v = need(key);
        if (!v.is_int())
            fail(Errc::SchemaViolation, "field '" + std::string(key) + "' must be an integer");
        return v.as_int();
    }

    Money money(std::string_view key, const std::string& currency)
    {
        return wrap(key, [&] { return Money::parse(need(key).as_string(), currency); });
    }

    AccountId account(std::string_view key)
    {
        return wrap(key, [&] { return AccountId::parse(need(key).as_string()); });
    }

    Timestamp timestamp(std::string_view key)
    {
        return wrap(key, [&] { return parse_timestamp(need(key).as_string()); });
    }

    std::string blob(std::string_view key)
    {
        const Value* v = take(key);
        if (v == nullptr)
            return {};
        return wrap(key, [&] { return blob_from_b64(v->as_string()); });
    }

    const Value* optional_map(std::string_view key)
    {
        const Value* v = take(key);
        if (v != nullptr && !v->is_map())
            fail(Errc::SchemaViolation, "field '" + std::string(key) + "' must be a map");
        return v;
    }

    const Value& map(std::string_view key)
    {
        const Value& v = need(key);
        if (!v.is_map())
            fail(Errc::SchemaViolation, "field '" + std::string(key) + "' must be a map");
        return v;
    }

    const Value& list(std::string_view key)
    {
        const Value& v = need(key);
        if (!v.is_list())
            fail(Errc::SchemaViolation, "field '" + std::string(key) + "' must be a list");
        return v;
    }

    void ignore(std::string_view key) { take(key); }

    void done() const
    {
        for (const auto& [key, value] : params_.as_map()) {
            if (!consumed_.contains(key))
                fail(Errc::SchemaViolation, "unexpected field '" + key + "'");
        }
    }

private:
    const Value* take(std::string_view key)
    {
        consumed_.insert(std::string(key));
        return params_.find(key);
    }

    const Value& need(std::string_view key)
    {
        const Value* v = take(key);
        if (v == nullptr)
            fail(Errc::SchemaViolation, "missing field '" + std::string(key) + "'");
        return *v;
    }

    template <typename F> auto wrap(std::string_view key, F&& f) -> decltype(f())
    {
        try {
            return f();
        } catch (const GridBankError&) {
            fail(Errc::SchemaViolation, "malformed field '" + std::string(key) + "'");
        }
    }

    const Value& params_;
    std::set<std::string, std::less<>> consumed_;
};

void require_admin(Role role)
{
    if (role != Role::Admin)
        fail(Errc::Forbidden, "administrator access required");
}

} // namespace

Bank::Bank(BankConfig config, std::shared_ptr<Clock> clock,
           std::shared_ptr<KeyRegistry> registry, RandomSource random)
    : config_(std::move(config))
    , clock_(std::move(clock))
    , registry_(std::move(registry))
{
    if (!clock_ || !registry_)
        fail(Errc::ConfigError, "bank needs a clock and a key registry");
    if (config_.journal_path)
        journal_ = std::make_shared<FileJournal>(*config_.journal_path);
    else
        journal_ = std::make_shared<NullJournal>();

    ledger_ = std::make_unique<Ledger>(clock_, journal_, config_.currency);
    instruments_ = std::make_unique<InstrumentService>(*ledger_, *registry_, config_.identity,
                                                       config_.endpoint, clock_, journal_,
                                                       std::move(random));

    if (config_.journal_path) {
        FileJournal::replay(*config_.journal_path, [this](const Value& event) {
            const std::string& kind = event.string_at("Record");
            if (Ledger::owns_event(kind))
                ledger_->replay_event(event);
            else if (InstrumentService::owns_event(kind))
                instruments_->replay_event(event);
            else
                fail(Errc::IoError, "journal event '" + kind + "' belongs to no module");
        });
    }
}

std::optional<Role> Bank::authorize(const std::string& subject) const
{
    return authorize_connection(
        config_.admins, [this](const std::string& s) { return ledger_->has_open_account_for(s); },
        subject);
}

PriceEstimate Bank::estimate(const ResourceDescription& query, std::int64_t k) const
{
    return estimate_price(instruments_->price_history(), query, k);
}

std::string Bank::state_digest() const
{
    Value state = Value::map();
    state.set("Ledger", ledger_->state_value());
    state.set("Instruments", instruments_->state_value());
    return hex_encode(sha256(state.encode()));
}

void Bank::require_owner(const std::string& subject, Role role, const AccountId& id) const
{
    if (role == Role::Admin)
        return;
    if (ledger_->get_account(id).certificate_name != subject)
        fail(Errc::Forbidden, "account " + id.text() + " is not owned by caller");
}

void Bank::require_lock_owner(const std::string& subject, Role role, std::uint64_t lock_id) const
{
    if (role == Role::Admin)
        return;
    auto lock = ledger_->find_lock(lock_id);
    if (!lock)
        fail(Errc::NoSuchLock, std::to_string(lock_id));
    require_owner(subject, role, lock->account_id);
}

Value Bank::dispatch(const std::string& subject, Role role, const Value& body)
{
    std::int64_t request_id = 0;
    Value response = Value::map();
    try {
        request_id = body.int_at("RequestID");
        response.set("RequestID", request_id);
        const std::string& op = body.string_at("Op");
        const Value* params = body.find("Params");
        Value empty = Value::map();
        response.set("Result", execute(subject, role, op, params != nullptr ? *params : empty));
    } catch (const GridBankError& e) {
        response.set("RequestID", request_id);
        response.set("Error", std::string(errc_code(e.code())));
        response.set("Message", std::string(e.what()));
    }
    return response;
}

Value Bank::redeem_one(const std::string& subject, const Value& item)
{
    Params p(item);
    const std::string kind = p.str("Kind");
    std::optional<ResourceDescription> description;
    if (const Value* desc = p.optional_map("Description")) {
        try {
            description = ResourceDescription::from_value(*desc);
        } catch (const GridBankError&) {
            fail(Errc::SchemaViolation, "malformed Description");
        }
    }

    if (kind == "Cheque") {
        SignedEnvelope env = SignedEnvelope::from_value(p.map("Cheque"));
        Money claim = p.money("Claim", config_.currency);
        std::string rur = p.blob("ResourceUsageRecord");
        p.done();
        RedemptionResult r = instruments_->redeem_cheque(env, claim, rur, subject, description);
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(r.transaction_id));
        out.set("Amount", r.amount.text());
        return out;
    }
    if (kind == "Chain") {
        SignedEnvelope env = SignedEnvelope::from_value(p.map("Commitment"));
        std::int64_t index = p.integer("Index");
        if (index < 1 || index > 0xFFFFFFFF)
            fail(Errc::SchemaViolation, "Index out of range");
        std::string preimage_raw = p.blob("Preimage");
        if (preimage_raw.size() != 32)
            fail(Errc::SchemaViolation, "Preimage must be 32 bytes");
        std::string rur = p.blob("ResourceUsageRecord");
        p.done();
        PayWord payword;
        payword.index = static_cast<std::uint32_t>(index);
        std::copy(preimage_raw.begin(), preimage_raw.end(), payword.preimage.begin());
        RedemptionResult r =
            instruments_->redeem_hash_chain(env, payword, rur, subject, description);
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(r.transaction_id));
        out.set("Amount", r.amount.text());
        out.set("Index", static_cast<std::int64_t>(r.chain_index));
        return out;
    }
    fail(Errc::SchemaViolation, "unknown redemption kind '" + kind + "'");
}

Value Bank::execute(const std::string& subject, Role role, const std::string& op,
                    const Value& params)
{
    Params p(params);

    if (op == "CreateAccount") {
        std::string certificate_name = p.str("CertificateName");
        std::string organization = p.str_or("OrganizationName", "");
        std::string currency = p.str_or("Currency", config_.currency);
        p.done();
        // Administrators open accounts on behalf of new subjects; an account
        // holder may only open one bound to their own connected identity.
        if (role != Role::Admin && certificate_name != subject)
            fail(Errc::Forbidden, "cannot create an account for another subject");
        AccountId id = ledger_->create_account(certificate_name, organization, currency);
        Value out = Value::map();
        out.set("AccountID", id.text());
        return out;
    }
    if (op == "GetAccount") {
        AccountId id = p.account("AccountID");
        p.done();
        require_owner(subject, role, id);
        return ledger_->get_account(id).to_value();
    }
    if (op == "UpdateAccount") {
        AccountId id = p.account("AccountID");
        Account submitted;
        submitted.account_id = id;
        submitted.certificate_name = p.str("CertificateName");
        submitted.organization_name = p.str_or("OrganizationName", "");
        // Balance and limit fields of a submitted record are ignored.
        p.ignore("AvailableBalance");
        p.ignore("LockedBalance");
        p.ignore("Currency");
        p.ignore("CreditLimit");
        p.done();
        require_owner(subject, role, id);
        ledger_->update_account(submitted);
        Value out = Value::map();
        out.set("Updated", 1);
        return out;
    }
    if (op == "Statement") {
        AccountId id = p.account("AccountID");
        Timestamp start = p.timestamp("StartDate");
        Timestamp end = p.timestamp("EndDate");
        p.done();
        if (role != Role::Admin) {
            // Owner check that still works for closed accounts.
            auto open = ledger_->account_for_subject(subject);
            bool owns_open = open && *open == id;
            if (!owns_open)
                fail(Errc::Forbidden, "statement restricted to the account owner");
        }
        StatementResult result = ledger_->statement(id, start, end);
        Value transactions = Value::list();
        for (const auto& txn : result.transactions)
            transactions.push(txn.to_value());
        Value transfers = Value::list();
        for (const auto& xfer : result.transfers)
            transfers.push(xfer.to_value());
        Value out = Value::map();
        out.set("Account", result.account.to_value());
        out.set("Transactions", std::move(transactions));
        out.set("Transfers", std::move(transfers));
        return out;
    }
    if (op == "Deposit" || op == "Withdraw") {
        require_admin(role);
        AccountId id = p.account("AccountID");
        Money amount = p.money("Amount", ledger_->get_account(id).available_balance.currency);
        p.done();
        std::uint64_t txn_id = op == "Deposit" ? ledger_->deposit(id, amount, Access::Admin)
                                               : ledger_->withdraw(id, amount, Access::Admin);
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(txn_id));
        return out;
    }
    if (op == "SetCreditLimit") {
        require_admin(role);
        AccountId id = p.account("AccountID");
        Money limit = p.money("CreditLimit", ledger_->get_account(id).credit_limit.currency);
        p.done();
        ledger_->set_credit_limit(id, limit, Access::Admin);
        Value out = Value::map();
        out.set("CreditLimit", limit.text());
        return out;
    }
    if (op == "Transfer") {
        AccountId drawer = p.account("DrawerAccountID");
        AccountId recipient = p.account("RecipientAccountID");
        Money amount = p.money("Amount", ledger_->get_account(drawer).available_balance.currency);
        std::string rur = p.blob("ResourceUsageRecord");
        p.done();
        require_owner(subject, role, drawer);
        std::uint64_t txn_id = ledger_->transfer(drawer, recipient, amount, rur);
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(txn_id));
        return out;
    }
    if (op == "DirectTransferPayment") {
        AccountId drawer = p.account("DrawerAccountID");
        AccountId recipient = p.account("RecipientAccountID");
        Money amount = p.money("Amount", ledger_->get_account(drawer).available_balance.currency);
        std::string endpoint = p.str("ConfirmationEndpoint");
        p.done();
        require_owner(subject, role, drawer);
        std::uint64_t txn_id = ledger_->transfer(drawer, recipient, amount, {});

        // The transfer is committed regardless of confirmation delivery; an
        // unreachable endpoint is reported, not rolled back.
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(txn_id));
        Value confirmation = Value::map();
        confirmation.set("TransactionID", static_cast<std::int64_t>(txn_id));
        confirmation.set("Amount", amount.text());
        confirmation.set("DrawerAccountID", drawer.text());
        confirmation.set("RecipientAccountID", recipient.text());
        try {
            TcpConnection peer = TcpConnection::connect_endpoint(endpoint);
            peer.send_frame(frame_envelope(config_.identity,
                                           make_request(0, "PaymentConfirmation", confirmation)));
            peer.recv_frame(); // ack
            out.set("ConfirmationDelivered", 1);
        } catch (const GridBankError&) {
            out.set("ConfirmationDelivered", 0);
            out.set("ConfirmationError", std::string(errc_code(Errc::UnreachableEndpoint)));
        }
        return out;
    }
    if (op == "LockFunds") {
        AccountId id = p.account("AccountID");
        Money amount = p.money("Amount", ledger_->get_account(id).available_balance.currency);
        std::string purpose = p.str_or("Purpose", "");
        p.done();
        require_owner(subject, role, id);
        std::uint64_t lock_id = ledger_->lock_funds(id, amount, purpose);
        Value out = Value::map();
        out.set("LockID", static_cast<std::int64_t>(lock_id));
        return out;
    }
    if (op == "TransferFromLocked") {
        std::uint64_t lock_id = static_cast<std::uint64_t>(p.integer("LockID"));
        AccountId recipient = p.account("RecipientAccountID");
        auto lock = ledger_->find_lock(lock_id);
        Money amount =
            p.money("Amount", lock ? lock->remaining.currency : config_.currency);
        std::string rur = p.blob("ResourceUsageRecord");
        p.done();
        require_lock_owner(subject, role, lock_id);
        std::uint64_t txn_id = ledger_->transfer_from_locked(lock_id, recipient, amount, rur);
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(txn_id));
        return out;
    }
    if (op == "ReleaseLock") {
        std::uint64_t lock_id = static_cast<std::uint64_t>(p.integer("LockID"));
        p.done();
        require_lock_owner(subject, role, lock_id);
        ledger_->release_lock(lock_id);
        Value out = Value::map();
        out.set("Released", 1);
        return out;
    }
    if (op == "CancelTransfer") {
        require_admin(role);
        std::uint64_t txn_id = static_cast<std::uint64_t>(p.integer("TransactionID"));
        p.done();
        std::uint64_t compensating = ledger_->cancel_transfer(txn_id, Access::Admin);
        Value out = Value::map();
        out.set("TransactionID", static_cast<std::int64_t>(compensating));
        return out;
    }
    if (op == "CloseAccount") {
        require_admin(role);
        AccountId id = p.account("AccountID");
        AccountId destination = p.account("DestinationAccountID");
        p.done();
        ledger_->close_account(id, destination, Access::Admin);
        Value out = Value::map();
        out.set("Closed", 1);
        return out;
    }
    if (op == "IssueCheque") {
        AccountId drawer = p.account("DrawerAccountID");
        std::string payee = p.str("PayeeCertificateName");
        Money limit =
            p.money("AmountLimit", ledger_->get_account(drawer).available_balance.currency);
        std::int64_t ttl = p.integer("TTLSeconds");
        p.done();
        require_owner(subject, role, drawer);
        SignedEnvelope env = instruments_->issue_cheque(drawer, payee, limit, ttl);
        Value out = Value::map();
        out.set("Cheque", env.to_value());
        return out;
    }
    if (op == "RedeemCheque") {
        Value item = Value::map();
        item.set("Kind", "Cheque");
        item.set("Cheque", p.map("Cheque"));
        item.set("Claim", p.str("Claim"));
        if (const Value* blob = params.find("ResourceUsageRecord")) {
            p.ignore("ResourceUsageRecord");
            item.set("ResourceUsageRecord", *blob);
        }
        if (const Value* desc = p.optional_map("Description"))
            item.set("Description", *desc);
        p.done();
        return redeem_one(subject, item);
    }
    if (op == "IssueHashChain") {
        AccountId drawer = p.account("DrawerAccountID");
        std::string payee = p.str("PayeeCertificateName");
        std::int64_t links = p.integer("Links");
        Money link_value =
            p.money("LinkValue", ledger_->get_account(drawer).available_balance.currency);
        std::int64_t ttl = p.integer("TTLSeconds");
        p.done();
        require_owner(subject, role, drawer);
        if (links < 1 || links > 0xFFFFFFFF)
            fail(Errc::BadParameters, "link count out of range");
        std::vector<Hash256> secrets;
        SignedEnvelope env = instruments_->issue_hash_chain(
            drawer, payee, static_cast<std::uint32_t>(links), link_value, ttl, secrets);
        Value paywords = Value::list();
        for (const auto& secret : secrets)
            paywords.push(base64_encode(secret));
        Value out = Value::map();
        out.set("Commitment", env.to_value());
        out.set("Paywords", std::move(paywords));
        return out;
    }
    if (op == "RedeemHashChain") {
        Value item = Value::map();
        item.set("Kind", "Chain");
        item.set("Commitment", p.map("Commitment"));
        item.set("Index", p.integer("Index"));
        item.set("Preimage", p.str("Preimage"));
        if (const Value* blob = params.find("ResourceUsageRecord")) {
            p.ignore("ResourceUsageRecord");
            item.set("ResourceUsageRecord", *blob);
        }
        if (const Value* desc = p.optional_map("Description"))
            item.set("Description", *desc);
        p.done();
        return redeem_one(subject, item);
    }
    if (op == "RedeemBatch") {
        const Value& items = p.list("Items");
        p.done();
        Value results = Value::list();
        for (const auto& item : items.as_list()) {
            // Applied in order, each atomically; one bad item does not stop
            // the rest.
            try {
                Value ok = Value::map();
                ok.set("Ok", redeem_one(subject, item));
                results.push(std::move(ok));
            } catch (const GridBankError& e) {
                Value err = Value::map();
                err.set("Error", std::string(errc_code(e.code())));
                err.set("Message", std::string(e.what()));
                results.push(std::move(err));
            }
        }
        Value out = Value::map();
        out.set("Results", std::move(results));
        return out;
    }
    if (op == "EstimatePrice") {
        ResourceDescription query;
        try {
            query = ResourceDescription::from_value(p.map("Description"));
        } catch (const GridBankError&) {
            fail(Errc::SchemaViolation, "malformed Description");
        }
        std::int64_t k = p.integer("K");
        p.done();
        return estimate(query, k).to_value();
    }
    if (op == "SweepExpired") {
        require_admin(role);
        p.done();
        auto [cheques, chains] = instruments_->sweep_expired();
        Value out = Value::map();
        out.set("ChequesSwept", static_cast<std::int64_t>(cheques));
        out.set("ChainsSwept", static_cast<std::int64_t>(chains));
        return out;
    }
    if (op == "StateDigest") {
        require_admin(role);
        p.done();
        Value out = Value::map();
        out.set("Digest", state_digest());
        return out;
    }

    fail(Errc::UnknownOp, op);
}

} // namespace gridbank
