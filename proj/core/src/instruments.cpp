#include "gridbank/instruments.hpp"

#include "gridbank/errors.hpp"

#include <cstdio>

namespace gridbank {

namespace {

std::string serial_id(const char* prefix, std::uint64_t serial)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "%s-%08llu", prefix, static_cast<unsigned long long>(serial));
    return buf;
}

std::uint64_t parse_serial(const std::string& id)
{
    auto dash = id.find('-');
    if (dash == std::string::npos)
        fail(Errc::BadMessage, "malformed instrument id " + id);
    return std::stoull(id.substr(dash + 1));
}

Hash256 hash_from_b64(const std::string& text)
{
    Bytes raw = base64_decode(text);
    if (raw.size() != 32)
        fail(Errc::BadMessage, "hash field must be 32 bytes");
    Hash256 out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

std::string hash_to_b64(const Hash256& hash)
{
    return base64_encode(hash);
}

} // namespace

std::string_view cheque_check_name(ChequeCheck c)
{
    switch (c) {
    case ChequeCheck::Valid: return "Valid";
    case ChequeCheck::BadSignature: return "BadSignature";
    case ChequeCheck::WrongPayee: return "WrongPayee";
    case ChequeCheck::Expired: return "Expired";
    case ChequeCheck::AlreadyRedeemed: return "AlreadyRedeemed";
    }
    return "BadSignature";
}

std::string_view payword_check_name(PaywordCheck c)
{
    switch (c) {
    case PaywordCheck::Valid: return "Valid";
    case PaywordCheck::BadPreimage: return "BadPreimage";
    case PaywordCheck::StaleIndex: return "StaleIndex";
    case PaywordCheck::IndexOverflow: return "IndexOverflow";
    case PaywordCheck::Expired: return "Expired";
    }
    return "BadPreimage";
}

Value GridCheque::to_value() const
{
    Value v = Value::map();
    v.set("ChequeID", cheque_id);
    v.set("DrawerAccountID", drawer_account_id.text());
    v.set("PayeeCertificateName", payee_subject);
    v.set("BankEndpoint", bank_endpoint);
    v.set("AmountLimit", amount_limit.text());
    v.set("Currency", amount_limit.currency);
    v.set("LockID", static_cast<std::int64_t>(lock_id));
    v.set("IssueDate", format_timestamp(issued_at));
    v.set("ExpiryDate", format_timestamp(expires_at));
    return v;
}

GridCheque GridCheque::from_value(const Value& v)
{
    GridCheque cheque;
    cheque.cheque_id = v.string_at("ChequeID");
    cheque.drawer_account_id = AccountId::parse(v.string_at("DrawerAccountID"));
    cheque.payee_subject = v.string_at("PayeeCertificateName");
    cheque.bank_endpoint = v.string_at("BankEndpoint");
    cheque.amount_limit = Money::parse(v.string_at("AmountLimit"), v.string_at("Currency"));
    cheque.lock_id = static_cast<std::uint64_t>(v.int_at("LockID"));
    cheque.issued_at = parse_timestamp(v.string_at("IssueDate"));
    cheque.expires_at = parse_timestamp(v.string_at("ExpiryDate"));
    return cheque;
}

Value HashChainCommitment::to_value() const
{
    Value v = Value::map();
    v.set("ChainID", chain_id);
    v.set("DrawerAccountID", drawer_account_id.text());
    v.set("PayeeCertificateName", payee_subject);
    v.set("Root", hash_to_b64(root));
    v.set("Length", static_cast<std::int64_t>(length));
    v.set("LinkValue", link_value.text());
    v.set("Currency", link_value.currency);
    v.set("LockID", static_cast<std::int64_t>(lock_id));
    v.set("IssueDate", format_timestamp(issued_at));
    v.set("ExpiryDate", format_timestamp(expires_at));
    return v;
}

HashChainCommitment HashChainCommitment::from_value(const Value& v)
{
    HashChainCommitment c;
    c.chain_id = v.string_at("ChainID");
    c.drawer_account_id = AccountId::parse(v.string_at("DrawerAccountID"));
    c.payee_subject = v.string_at("PayeeCertificateName");
    c.root = hash_from_b64(v.string_at("Root"));
    std::int64_t length = v.int_at("Length");
    if (length < 1 || length > 0xFFFFFFFF)
        fail(Errc::BadMessage, "chain length out of range");
    c.length = static_cast<std::uint32_t>(length);
    c.link_value = Money::parse(v.string_at("LinkValue"), v.string_at("Currency"));
    c.lock_id = static_cast<std::uint64_t>(v.int_at("LockID"));
    c.issued_at = parse_timestamp(v.string_at("IssueDate"));
    c.expires_at = parse_timestamp(v.string_at("ExpiryDate"));
    return c;
}

bool payword_matches_root(const Hash256& root, std::uint32_t index, const Hash256& preimage)
{
    Hash256 h = preimage;
    for (std::uint32_t i = 0; i < index; ++i)
        h = sha256(h);
    return h == root;
}

ChequeCheck check_cheque_envelope(const KeyRegistry& registry, const std::string& bank_subject,
                                  const SignedEnvelope& envelope,
                                  const std::string& presenting_subject, Timestamp now,
                                  GridCheque* parsed)
{
    if (envelope.signer != bank_subject)
        return ChequeCheck::BadSignature;
    auto key = registry.lookup(envelope.signer);
    if (!key || !verify_payload(*key, envelope.payload, envelope.signature))
        return ChequeCheck::BadSignature;
    GridCheque cheque;
    try {
        cheque = GridCheque::from_value(Value::parse(envelope.payload));
    } catch (const GridBankError&) {
        return ChequeCheck::BadSignature;
    }
    if (parsed != nullptr)
        *parsed = cheque;
    if (cheque.payee_subject != presenting_subject)
        return ChequeCheck::WrongPayee;
    if (now >= cheque.expires_at)
        return ChequeCheck::Expired;
    return ChequeCheck::Valid;
}

bool check_commitment_envelope(const KeyRegistry& registry, const std::string& bank_subject,
                               const SignedEnvelope& envelope, HashChainCommitment* parsed)
{
    if (envelope.signer != bank_subject)
        return false;
    auto key = registry.lookup(envelope.signer);
    if (!key || !verify_payload(*key, envelope.payload, envelope.signature))
        return false;
    try {
        HashChainCommitment c = HashChainCommitment::from_value(Value::parse(envelope.payload));
        if (parsed != nullptr)
            *parsed = c;
    } catch (const GridBankError&) {
        return false;
    }
    return true;
}

Value ResourceDescription::to_value() const
{
    Value v = Value::map();
    v.set("CPUCount", cpu_count);
    v.set("CPUSpeedGHz", cpu_speed_ghz.text());
    v.set("MemoryMB", memory_mb);
    v.set("StorageGB", storage_gb);
    v.set("BandwidthMbps", bandwidth_mbps.text());
    return v;
}

ResourceDescription ResourceDescription::from_value(const Value& v)
{
    ResourceDescription d;
    d.cpu_count = v.int_at("CPUCount");
    d.cpu_speed_ghz = Quantity::parse(v.string_at("CPUSpeedGHz"));
    d.memory_mb = v.int_at("MemoryMB");
    d.storage_gb = v.int_at("StorageGB");
    d.bandwidth_mbps = Quantity::parse(v.string_at("BandwidthMbps"));
    if (d.cpu_count <= 0 || d.memory_mb <= 0 || d.storage_gb <= 0 ||
        d.cpu_speed_ghz.micro <= 0 || d.bandwidth_mbps.micro <= 0)
        fail(Errc::BadMessage, "resource description fields must be positive");
    return d;
}

InstrumentService::InstrumentService(Ledger& ledger, KeyRegistry& registry, Identity bank_identity,
                                     std::string bank_endpoint, std::shared_ptr<Clock> clock,
                                     std::shared_ptr<Journal> journal, RandomSource random)
    : ledger_(ledger)
    , registry_(registry)
    , bank_identity_(std::move(bank_identity))
    , bank_endpoint_(std::move(bank_endpoint))
    , clock_(std::move(clock))
    , journal_(std::move(journal))
    , random_(std::move(random))
{
}

bool InstrumentService::owns_event(std::string_view record_kind)
{
    return record_kind == "ChequeIssued" || record_kind == "ChequeRedeemed" ||
           record_kind == "ChequeSwept" || record_kind == "ChainIssued" ||
           record_kind == "ChainRedeemed" || record_kind == "ChainSwept" ||
           record_kind == "PriceSampled";
}

void InstrumentService::replay_event(const Value& event)
{
    std::lock_guard lock(mutex_);
    apply_event(event);
}

void InstrumentService::commit(const Value& event)
{
    apply_event(event);
    journal_->append(event);
}

void InstrumentService::apply_event(const Value& event)
{
    const std::string& kind = event.string_at("Record");
    if (kind == "ChequeIssued") {
        GridCheque cheque = GridCheque::from_value(event.at("Instrument"));
        next_cheque_serial_ = std::max(next_cheque_serial_, parse_serial(cheque.cheque_id) + 1);
        ChequeState state;
        state.redeemed_amount = Money::zero(cheque.amount_limit.currency);
        state.cheque = std::move(cheque);
        cheques_.insert_or_assign(state.cheque.cheque_id, std::move(state));
        return;
    }
    if (kind == "ChequeRedeemed") {
        ChequeState& state = cheques_.at(event.string_at("ChequeID"));
        state.redeemed = true;
        state.redeemed_amount =
            Money::parse(event.string_at("Amount"), state.cheque.amount_limit.currency);
        return;
    }
    if (kind == "ChequeSwept") {
        cheques_.at(event.string_at("ChequeID")).expired_swept = true;
        return;
    }
    if (kind == "ChainIssued") {
        HashChainCommitment c = HashChainCommitment::from_value(event.at("Instrument"));
        next_chain_serial_ = std::max(next_chain_serial_, parse_serial(c.chain_id) + 1);
        ChainState state;
        state.commitment = std::move(c);
        chains_.insert_or_assign(state.commitment.chain_id, std::move(state));
        return;
    }
    if (kind == "ChainRedeemed") {
        ChainState& state = chains_.at(event.string_at("ChainID"));
        state.highest_redeemed = static_cast<std::uint32_t>(event.int_at("Index"));
        return;
    }
    if (kind == "ChainSwept") {
        chains_.at(event.string_at("ChainID")).expired_swept = true;
        return;
    }
    if (kind == "PriceSampled") {
        price_history_.push_back({ResourceDescription::from_value(event.at("Description")),
                                  Quantity::parse(event.string_at("Rate"))});
        return;
    }
    fail(Errc::BadMessage, "unknown instrument event '" + kind + "'");
}

AccountId InstrumentService::payee_account(const std::string& payee_subject) const
{
    auto account = ledger_.account_for_subject(payee_subject);
    if (!account)
        fail(Errc::PayeeHasNoAccount, payee_subject);
    return *account;
}

SignedEnvelope InstrumentService::issue_cheque(const AccountId& drawer,
                                               const std::string& payee_subject,
                                               const Money& amount_limit,
                                               std::int64_t ttl_seconds)
{
    if (!amount_limit.positive())
        fail(Errc::NonPositiveAmount, "cheque limit must be positive");
    if (payee_subject.empty() || ttl_seconds <= 0)
        fail(Errc::BadParameters);
    if (ledger_.get_account(drawer).certificate_name == payee_subject)
        fail(Errc::BadParameters, "cheque payee is the drawer");

    std::lock_guard lock(mutex_);
    std::string cheque_id = serial_id("CHQ", next_cheque_serial_);
    std::uint64_t lock_id = ledger_.lock_funds(drawer, amount_limit, cheque_id);

    GridCheque cheque;
    cheque.cheque_id = cheque_id;
    cheque.drawer_account_id = drawer;
    cheque.payee_subject = payee_subject;
    cheque.bank_endpoint = bank_endpoint_;
    cheque.amount_limit = amount_limit;
    cheque.lock_id = lock_id;
    cheque.issued_at = clock_->now();
    cheque.expires_at = cheque.issued_at + ttl_seconds;

    SignedEnvelope envelope = seal(bank_identity_, cheque.to_value());
    Value event = Value::map();
    event.set("Record", "ChequeIssued");
    event.set("Instrument", cheque.to_value());
    event.set("Signature", base64_encode(envelope.signature));
    commit(event);
    return envelope;
}

ChequeCheck InstrumentService::verify_cheque(const SignedEnvelope& envelope,
                                             const std::string& presenting_subject, Timestamp now,
                                             GridCheque* parsed) const
{
    GridCheque cheque;
    ChequeCheck check = check_cheque_envelope(registry_, bank_identity_.subject, envelope,
                                              presenting_subject, now, &cheque);
    if (parsed != nullptr)
        *parsed = cheque;
    if (check != ChequeCheck::Valid)
        return check;

    std::lock_guard lock(mutex_);
    auto it = cheques_.find(cheque.cheque_id);
    if (it == cheques_.end())
        return ChequeCheck::BadSignature; // not an instrument this bank issued
    if (it->second.redeemed || it->second.expired_swept)
        return ChequeCheck::AlreadyRedeemed;
    return ChequeCheck::Valid;
}

RedemptionResult InstrumentService::redeem_cheque(
    const SignedEnvelope& envelope, const Money& claimed, const std::string& rur_blob,
    const std::string& presenter, const std::optional<ResourceDescription>& description)
{
    std::lock_guard lock(mutex_);
    GridCheque cheque;
    switch (verify_cheque(envelope, presenter, clock_->now(), &cheque)) {
    case ChequeCheck::Valid:
        break;
    case ChequeCheck::BadSignature:
        fail(Errc::BadSignature, "cheque failed verification");
    case ChequeCheck::WrongPayee:
        fail(Errc::WrongPayee, cheque.cheque_id);
    case ChequeCheck::Expired:
        fail(Errc::Expired, cheque.cheque_id);
    case ChequeCheck::AlreadyRedeemed:
        fail(Errc::AlreadyRedeemed, cheque.cheque_id);
    }
    if (!claimed.positive())
        fail(Errc::NonPositiveAmount, "claim must be positive");
    if (claimed > cheque.amount_limit)
        fail(Errc::ExceedsLimit,
             claimed.text() + " over cheque limit " + cheque.amount_limit.text());

    AccountId payee = payee_account(cheque.payee_subject);
    std::uint64_t txn_id = ledger_.transfer_from_locked(cheque.lock_id, payee, claimed, rur_blob);
    if (ledger_.find_lock(cheque.lock_id))
        ledger_.release_lock(cheque.lock_id); // remainder back to the drawer

    Value event = Value::map();
    event.set("Record", "ChequeRedeemed");
    event.set("ChequeID", cheque.cheque_id);
    event.set("TransactionID", static_cast<std::int64_t>(txn_id));
    event.set("Amount", claimed.text());
    commit(event);

    record_price_sample(description, rur_blob, claimed);
    return {txn_id, claimed, 0};
}

SignedEnvelope InstrumentService::issue_hash_chain(const AccountId& drawer,
                                                   const std::string& payee_subject,
                                                   std::uint32_t n_links, const Money& link_value,
                                                   std::int64_t ttl_seconds,
                                                   std::vector<Hash256>& secrets_out)
{
    if (n_links < 1)
        fail(Errc::BadParameters, "chain needs at least one link");
    if (!link_value.positive())
        fail(Errc::BadParameters, "link value must be positive");
    if (payee_subject.empty() || ttl_seconds <= 0)
        fail(Errc::BadParameters);
    if (ledger_.get_account(drawer).certificate_name == payee_subject)
        fail(Errc::BadParameters, "chain payee is the drawer");

    std::lock_guard lock(mutex_);
    std::string chain_id = serial_id("CHN", next_chain_serial_);
    Money total = link_value.times(n_links);
    std::uint64_t lock_id = ledger_.lock_funds(drawer, total, chain_id);

    // secrets_out[i-1] holds w_i; w_{i} = H(w_{i+1}), w_0 is the public root.
    secrets_out.assign(n_links, Hash256{});
    random_(secrets_out[n_links - 1]);
    for (std::uint32_t i = n_links - 1; i > 0; --i)
        secrets_out[i - 1] = sha256(secrets_out[i]);

    HashChainCommitment commitment;
    commitment.chain_id = chain_id;
    commitment.drawer_account_id = drawer;
    commitment.payee_subject = payee_subject;
    commitment.root = sha256(secrets_out[0]);
    commitment.length = n_links;
    commitment.link_value = link_value;
    commitment.lock_id = lock_id;
    commitment.issued_at = clock_->now();
    commitment.expires_at = commitment.issued_at + ttl_seconds;

    SignedEnvelope envelope = seal(bank_identity_, commitment.to_value());
    Value event = Value::map();
    event.set("Record", "ChainIssued");
    event.set("Instrument", commitment.to_value());
    event.set("Signature", base64_encode(envelope.signature));
    commit(event);
    return envelope;
}

PaywordCheck InstrumentService::verify_payword(const HashChainCommitment& commitment,
                                               const PayWord& payword,
                                               std::uint32_t last_accepted_index,
                                               Timestamp now) const
{
    if (now >= commitment.expires_at)
        return PaywordCheck::Expired;
    if (payword.index > commitment.length)
        return PaywordCheck::IndexOverflow;
    if (payword.index <= last_accepted_index || payword.index == 0)
        return PaywordCheck::StaleIndex;
    if (!payword_matches_root(commitment.root, payword.index, payword.preimage))
        return PaywordCheck::BadPreimage;
    return PaywordCheck::Valid;
}

RedemptionResult InstrumentService::redeem_hash_chain(
    const SignedEnvelope& envelope, const PayWord& payword, const std::string& rur_blob,
    const std::string& presenter, const std::optional<ResourceDescription>& description)
{
    std::lock_guard lock(mutex_);
    HashChainCommitment commitment;
    if (!check_commitment_envelope(registry_, bank_identity_.subject, envelope, &commitment))
        fail(Errc::BadSignature, "chain commitment failed verification");
    if (commitment.payee_subject != presenter)
        fail(Errc::WrongPayee, commitment.chain_id);

    auto it = chains_.find(commitment.chain_id);
    if (it == chains_.end())
        fail(Errc::BadSignature, "unknown chain " + commitment.chain_id);
    if (it->second.expired_swept)
        fail(Errc::Expired, commitment.chain_id);

    switch (verify_payword(commitment, payword, it->second.highest_redeemed, clock_->now())) {
    case PaywordCheck::Valid:
        break;
    case PaywordCheck::Expired:
        fail(Errc::Expired, commitment.chain_id);
    case PaywordCheck::IndexOverflow:
        fail(Errc::IndexOverflow, "index over chain length");
    case PaywordCheck::StaleIndex:
        fail(Errc::StaleIndex, "index already redeemed");
    case PaywordCheck::BadPreimage:
        fail(Errc::BadPreimage, commitment.chain_id);
    }

    std::uint32_t delta = payword.index - it->second.highest_redeemed;
    Money amount = commitment.link_value.times(delta);
    AccountId payee = payee_account(commitment.payee_subject);
    std::uint64_t txn_id =
        ledger_.transfer_from_locked(commitment.lock_id, payee, amount, rur_blob);

    Value event = Value::map();
    event.set("Record", "ChainRedeemed");
    event.set("ChainID", commitment.chain_id);
    event.set("Index", static_cast<std::int64_t>(payword.index));
    event.set("TransactionID", static_cast<std::int64_t>(txn_id));
    commit(event);

    record_price_sample(description, rur_blob, amount);
    return {txn_id, amount, payword.index};
}

std::pair<std::size_t, std::size_t> InstrumentService::sweep_expired()
{
    std::lock_guard lock(mutex_);
    Timestamp now = clock_->now();
    std::size_t cheques_swept = 0;
    std::size_t chains_swept = 0;

    for (auto& [id, state] : cheques_) {
        if (state.redeemed || state.expired_swept || now < state.cheque.expires_at)
            continue;
        if (ledger_.find_lock(state.cheque.lock_id))
            ledger_.release_lock(state.cheque.lock_id);
        Value event = Value::map();
        event.set("Record", "ChequeSwept");
        event.set("ChequeID", id);
        commit(event);
        ++cheques_swept;
    }
    for (auto& [id, state] : chains_) {
        if (state.expired_swept || now < state.commitment.expires_at)
            continue;
        if (ledger_.find_lock(state.commitment.lock_id))
            ledger_.release_lock(state.commitment.lock_id);
        Value event = Value::map();
        event.set("Record", "ChainSwept");
        event.set("ChainID", id);
        commit(event);
        ++chains_swept;
    }
    return {cheques_swept, chains_swept};
}

std::uint32_t InstrumentService::chain_redeemed_index(const std::string& chain_id) const
{
    std::lock_guard lock(mutex_);
    auto it = chains_.find(chain_id);
    if (it == chains_.end())
        fail(Errc::BadParameters, "unknown chain " + chain_id);
    return it->second.highest_redeemed;
}

void InstrumentService::record_price_sample(
    const std::optional<ResourceDescription>& description, const std::string& rur_blob,
    const Money& amount)
{
    if (!description || rur_blob.empty())
        return;
    ResourceUsageRecord rur;
    try {
        rur = ResourceUsageRecord::decode(rur_blob);
    } catch (const GridBankError&) {
        return; // opaque blob in a foreign format; nothing to sample
    }
    auto cpu = rur.items.find(ChargeItem::CpuTime);
    if (cpu == rur.items.end() || cpu->second.usage.micro <= 0)
        return;
    Quantity rate = rate_per_hour(amount, cpu->second.usage);

    Value event = Value::map();
    event.set("Record", "PriceSampled");
    event.set("Description", description->to_value());
    event.set("Rate", rate.text());
    commit(event);
}

Value InstrumentService::state_value() const
{
    std::lock_guard lock(mutex_);
    Value cheques = Value::list();
    for (const auto& [id, state] : cheques_) {
        Value v = Value::map();
        v.set("ChequeID", id);
        v.set("Redeemed", state.redeemed ? 1 : 0);
        v.set("Swept", state.expired_swept ? 1 : 0);
        v.set("Amount", state.redeemed_amount.text());
        cheques.push(std::move(v));
    }
    Value chains = Value::list();
    for (const auto& [id, state] : chains_) {
        Value v = Value::map();
        v.set("ChainID", id);
        v.set("HighestRedeemed", static_cast<std::int64_t>(state.highest_redeemed));
        v.set("Swept", state.expired_swept ? 1 : 0);
        chains.push(std::move(v));
    }
    Value samples = Value::list();
    for (const auto& sample : price_history_) {
        Value v = Value::map();
        v.set("Description", sample.description.to_value());
        v.set("Rate", sample.rate.text());
        samples.push(std::move(v));
    }
    Value state = Value::map();
    state.set("Cheques", std::move(cheques));
    state.set("Chains", std::move(chains));
    state.set("PriceHistory", std::move(samples));
    state.set("NextChequeSerial", static_cast<std::int64_t>(next_cheque_serial_));
    state.set("NextChainSerial", static_cast<std::int64_t>(next_chain_serial_));
    return state;
}

} // namespace gridbank
