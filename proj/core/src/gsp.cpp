#include "gridbank/gsp.hpp"

#include "gridbank/errors.hpp"

#include <algorithm>
#include <fstream>

namespace gridbank {

namespace {

std::string quote_subject(const std::string& subject)
{
    std::string out = "\"";
    for (char c : subject) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

std::string blob_b64(const std::string& blob)
{
    return base64_encode(
        std::span(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()));
}

// |meter - agent| / agent > 5%, checked per usage figure
bool beyond_tolerance(Quantity meter, Quantity agent)
{
    std::int64_t diff = meter.micro - agent.micro;
    if (diff < 0)
        diff = -diff;
    return diff * 20 > agent.micro;
}

} // namespace

// --- TemplateAccountPool -------------------------------------------------------

TemplateAccountPool::TemplateAccountPool(std::vector<std::string> accounts,
                                         std::filesystem::path mapfile)
    : accounts_(std::move(accounts))
    , free_(accounts_)
    , mapfile_(std::move(mapfile))
{
    if (accounts_.empty())
        fail(Errc::ConfigError, "template account pool is empty");
    rewrite_mapfile();
}

std::string TemplateAccountPool::allocate(const std::string& consumer_subject,
                                          const std::string& instrument_id, Timestamp now)
{
    std::lock_guard lock(mutex_);
    for (const auto& [local, mapping] : active_) {
        if (mapping.consumer_subject == consumer_subject &&
            mapping.instrument_id == instrument_id)
            fail(Errc::BadParameters, "instrument already mapped to " + local);
    }
    if (free_.empty())
        fail(Errc::PoolExhausted, "all template accounts are mapped");
    std::string local = free_.back();
    free_.pop_back();
    active_.emplace(local, Mapping{local, consumer_subject, instrument_id, now});
    rewrite_mapfile();
    return local;
}

void TemplateAccountPool::release(const std::string& local_account)
{
    std::lock_guard lock(mutex_);
    auto it = active_.find(local_account);
    if (it == active_.end())
        fail(Errc::BadParameters, "account " + local_account + " is not mapped");
    active_.erase(it);
    free_.push_back(local_account);
    rewrite_mapfile();
}

std::size_t TemplateAccountPool::size() const
{
    std::lock_guard lock(mutex_);
    return accounts_.size();
}

std::size_t TemplateAccountPool::free_count() const
{
    std::lock_guard lock(mutex_);
    return free_.size();
}

std::vector<TemplateAccountPool::Mapping> TemplateAccountPool::active() const
{
    std::lock_guard lock(mutex_);
    std::vector<Mapping> out;
    out.reserve(active_.size());
    for (const auto& [local, mapping] : active_)
        out.push_back(mapping);
    return out;
}

void TemplateAccountPool::rewrite_mapfile() const
{
    std::ofstream out(mapfile_, std::ios::trunc);
    if (!out)
        fail(Errc::IoError, "cannot write mapfile " + mapfile_.string());
    for (const auto& [local, mapping] : active_)
        out << quote_subject(mapping.consumer_subject) << ' ' << local << '\n';
}

std::vector<std::pair<std::string, std::string>>
TemplateAccountPool::parse_mapfile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(Errc::IoError, "cannot read mapfile " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line.front() != '"')
            fail(Errc::BadMessage, "malformed mapfile line: " + line);
        std::string subject;
        std::size_t i = 1;
        for (; i < line.size(); ++i) {
            if (line[i] == '\\' && i + 1 < line.size()) {
                subject += line[++i];
            } else if (line[i] == '"') {
                break;
            } else {
                subject += line[i];
            }
        }
        if (i >= line.size() || i + 2 > line.size() || line[i + 1] != ' ')
            fail(Errc::BadMessage, "malformed mapfile line: " + line);
        out.emplace_back(subject, line.substr(i + 2));
    }
    return out;
}

// --- ProviderConfig ------------------------------------------------------------

Value ProviderConfig::to_value() const
{
    Value rates_value = Value::map();
    for (const auto& [item, rate] : rates)
        rates_value.set(std::string(charge_item_name(item)), rate.text());

    Value pool = Value::list();
    for (const auto& account : pool_accounts)
        pool.push(account);

    Value v = Value::map();
    v.set("Identity", identity.to_value());
    v.set("AccountID", account_id.text());
    v.set("BankSubject", bank_subject);
    v.set("BankEndpoint", bank_endpoint);
    v.set("HostName", host_name);
    if (!host_type.empty())
        v.set("HostType", host_type);
    v.set("Rates", std::move(rates_value));
    v.set("Currency", currency);
    v.set("RatesTTLSeconds", rates_ttl_seconds);
    v.set("PoolAccounts", std::move(pool));
    v.set("Mapfile", mapfile.string());
    if (description)
        v.set("Description", description->to_value());
    return v;
}

ProviderConfig ProviderConfig::from_value(const Value& v, const std::filesystem::path& base_dir)
{
    ProviderConfig cfg;
    if (const Value* identity_file = v.find("IdentityFile"))
        cfg.identity = Identity::load(base_dir / identity_file->as_string());
    else
        cfg.identity = Identity::from_value(v.at("Identity"));
    cfg.account_id = AccountId::parse(v.string_at("AccountID"));
    cfg.bank_subject = v.string_at("BankSubject");
    cfg.bank_endpoint = v.string_at("BankEndpoint");
    cfg.host_name = v.string_at("HostName");
    if (const Value* host_type = v.find("HostType"))
        cfg.host_type = host_type->as_string();
    cfg.rates.clear();
    for (ChargeItem item : k_all_charge_items) {
        if (const Value* rate = v.at("Rates").find(charge_item_name(item)))
            cfg.rates.emplace(item, Quantity::parse(rate->as_string()));
    }
    cfg.currency = v.string_at("Currency");
    cfg.rates_ttl_seconds = v.int_at("RatesTTLSeconds");
    cfg.pool_accounts.clear();
    for (const auto& account : v.at("PoolAccounts").as_list())
        cfg.pool_accounts.push_back(account.as_string());
    cfg.mapfile = base_dir / v.string_at("Mapfile");
    if (const Value* description = v.find("Description"))
        cfg.description = ResourceDescription::from_value(*description);
    return cfg;
}

Value Settlement::to_value() const
{
    Value v = Value::map();
    v.set("AllocationID", allocation_id);
    v.set("SignedCharge", signed_charge.to_value());
    v.set("Claim", claim.text());
    v.set("Shortfall", shortfall.text());
    v.set("DiscrepancyFlagged", discrepancy_flagged ? 1 : 0);
    return v;
}

// --- Provider ------------------------------------------------------------------

Provider::Provider(ProviderConfig config, std::shared_ptr<Clock> clock,
                   std::shared_ptr<KeyRegistry> registry)
    : config_(std::move(config))
    , clock_(std::move(clock))
    , registry_(std::move(registry))
    , pool_(config_.pool_accounts, config_.mapfile)
{
}

ChargeableRates Provider::current_rates() const
{
    ChargeableRates rates;
    rates.rates = config_.rates;
    rates.currency = config_.currency;
    rates.gsp_subject = config_.identity.subject;
    rates.valid_until = clock_->now() + config_.rates_ttl_seconds;
    return rates;
}

SignedEnvelope Provider::negotiate_rates()
{
    return seal(config_.identity, current_rates().to_value());
}

std::string Provider::authorize_access(const std::string& consumer_subject,
                                       const Value& instrument_ref,
                                       const SignedEnvelope& rates_envelope)
{
    // Rates offer must be our own signature and still valid.
    if (rates_envelope.signer != config_.identity.subject ||
        !verify_payload(config_.identity.public_key, rates_envelope.payload,
                        rates_envelope.signature))
        fail(Errc::BadSignature, "rates offer not signed by this provider");
    ChargeableRates rates = ChargeableRates::from_value(Value::parse(rates_envelope.payload));
    if (rates.expired(clock_->now()))
        fail(Errc::RatesExpired, "rates offer has lapsed");

    AllocationRec rec;
    rec.consumer_subject = consumer_subject;
    rec.rates = rates;
    rec.instrument_kind = instrument_ref.string_at("Kind");

    // Payee match is enforced before any account allocation.
    if (rec.instrument_kind == "Cheque") {
        rec.instrument_envelope = SignedEnvelope::from_value(instrument_ref.at("Cheque"));
        ChequeCheck check =
            check_cheque_envelope(*registry_, config_.bank_subject, rec.instrument_envelope,
                                  config_.identity.subject, clock_->now(), &rec.cheque);
        if (check != ChequeCheck::Valid)
            fail(Errc::InvalidInstrument, std::string(cheque_check_name(check)));
        rec.instrument_id = rec.cheque.cheque_id;
    } else if (rec.instrument_kind == "Chain") {
        rec.instrument_envelope = SignedEnvelope::from_value(instrument_ref.at("Commitment"));
        if (!check_commitment_envelope(*registry_, config_.bank_subject, rec.instrument_envelope,
                                       &rec.chain))
            fail(Errc::InvalidInstrument, "BadSignature");
        if (rec.chain.payee_subject != config_.identity.subject)
            fail(Errc::InvalidInstrument, "WrongPayee");
        if (clock_->now() >= rec.chain.expires_at)
            fail(Errc::InvalidInstrument, "Expired");
        rec.instrument_id = rec.chain.chain_id;
    } else if (rec.instrument_kind == "Confirmation") {
        std::uint64_t txn = static_cast<std::uint64_t>(instrument_ref.int_at("TransactionID"));
        Money amount = Money::parse(instrument_ref.string_at("Amount"), config_.currency);
        if (!has_confirmation(txn, amount))
            fail(Errc::InvalidInstrument, "no matching payment confirmation");
        rec.prepaid = amount;
        rec.instrument_id = "TXN-" + std::to_string(txn);
    } else {
        fail(Errc::InvalidInstrument, "unknown instrument kind '" + rec.instrument_kind + "'");
    }

    rec.local_account = pool_.allocate(consumer_subject, rec.instrument_id, clock_->now());

    std::lock_guard lock(mutex_);
    rec.allocation_id = "ALC-" + std::to_string(next_allocation_++);
    std::string id = rec.allocation_id;
    allocations_.emplace(id, std::move(rec));
    return id;
}

Provider::AllocationRec& Provider::allocation_ref(const std::string& allocation_id)
{
    auto it = allocations_.find(allocation_id);
    if (it == allocations_.end())
        fail(Errc::BadParameters, "unknown allocation " + allocation_id);
    return it->second;
}

RawUsage Provider::meter_job(const std::string& allocation_id, const DeclaredUsage& declared,
                             const std::optional<DeclaredUsage>& agent_usage)
{
    std::lock_guard lock(mutex_);
    AllocationRec& rec = allocation_ref(allocation_id);
    if (rec.state != AllocationState::Active)
        fail(Errc::NotActive, allocation_id);

    std::string local_job_id =
        rec.local_account + ":" + std::to_string(next_local_job_++);
    RawUsage raw = RawUsage::from_declared(declared, clock_->now(), local_job_id);

    if (agent_usage) {
        // Cross-check with the Grid Agent's own figure (5% relative band).
        rec.discrepancy_flagged =
            beyond_tolerance(declared.user_cpu_seconds, agent_usage->user_cpu_seconds) ||
            beyond_tolerance(declared.sys_cpu_seconds, agent_usage->sys_cpu_seconds) ||
            beyond_tolerance(declared.memory_mb_hours, agent_usage->memory_mb_hours) ||
            beyond_tolerance(declared.storage_mb_hours, agent_usage->storage_mb_hours) ||
            beyond_tolerance(declared.network_mb_total, agent_usage->network_mb_total);
    }
    rec.local_job_id = local_job_id;
    return raw;
}

Money Provider::instrument_capacity(const AllocationRec& rec) const
{
    if (rec.instrument_kind == "Cheque")
        return rec.cheque.amount_limit;
    if (rec.instrument_kind == "Chain")
        return rec.chain.link_value.times(rec.chain.length);
    return rec.prepaid;
}

Provider::JobPlan Provider::begin_job(const std::string& allocation_id, const std::string& job_id,
                                      const std::string& application_name,
                                      const DeclaredUsage& declared,
                                      const std::optional<DeclaredUsage>& agent_usage,
                                      const std::string& user_host)
{
    RawUsage raw = meter_job(allocation_id, declared, agent_usage);

    std::lock_guard lock(mutex_);
    AllocationRec& rec = allocation_ref(allocation_id);
    if (rec.has_job)
        fail(Errc::BadParameters, "allocation already carries a job");
    rec.has_job = true;
    rec.job_id = job_id;
    rec.application_name = application_name;
    rec.declared = declared;
    rec.user_host = user_host;
    rec.wall_start = raw.wall_start;

    JobPlan plan;
    if (rec.instrument_kind != "Chain")
        return plan;

    // Expected charge decides how many paywords the consumer owes.
    ResourceUsageRecord rur = convert_raw_usage(
        raw, {user_host, rec.consumer_subject}, {job_id, application_name},
        {config_.host_name, config_.identity.subject, config_.host_type}, rec.rates);
    Money expected = compute_charge(rur, rec.rates).total;
    Money capacity = instrument_capacity(rec);
    Money target = std::min(expected, capacity);
    std::int64_t v = rec.chain.link_value.milli;
    std::uint32_t needed = static_cast<std::uint32_t>((target.milli + v - 1) / v);
    needed = std::min(needed, rec.chain.length);

    rec.paywords_needed = needed;
    plan.paywords_needed = needed;
    plan.chain_id = rec.chain.chain_id;
    plan.awaiting_paywords = true;
    return plan;
}

std::uint32_t Provider::accept_payword(const std::string& allocation_id, std::uint32_t index,
                                       const Hash256& preimage)
{
    std::lock_guard lock(mutex_);
    AllocationRec& rec = allocation_ref(allocation_id);
    if (rec.state != AllocationState::Active || rec.instrument_kind != "Chain")
        fail(Errc::NotActive, allocation_id);
    if (clock_->now() >= rec.chain.expires_at)
        fail(Errc::Expired, rec.chain.chain_id);
    if (index <= rec.highest_payword || index == 0)
        fail(Errc::StaleIndex, "index " + std::to_string(index));
    if (index > rec.chain.length)
        fail(Errc::IndexOverflow, "index " + std::to_string(index));
    if (!payword_matches_root(rec.chain.root, index, preimage))
        fail(Errc::BadPreimage, "preimage does not hash to the chain root");
    rec.highest_payword = index;
    rec.best_preimage = preimage;
    return index;
}

Settlement Provider::settle_job(const std::string& allocation_id)
{
    std::lock_guard lock(mutex_);
    AllocationRec& rec = allocation_ref(allocation_id);
    if (rec.state != AllocationState::Active)
        fail(Errc::NotActive, allocation_id);
    if (!rec.has_job)
        fail(Errc::BadParameters, "no job submitted on this allocation");

    RawUsage raw = RawUsage::from_declared(rec.declared, rec.wall_start, rec.local_job_id);
    ResourceUsageRecord rur = convert_raw_usage(
        raw, {rec.user_host, rec.consumer_subject}, {rec.job_id, rec.application_name},
        {config_.host_name, config_.identity.subject, config_.host_type}, rec.rates);
    ChargeBreakdown breakdown = compute_charge(rur, rec.rates);

    Money capacity = instrument_capacity(rec);
    Money claim = std::min(breakdown.total, capacity);
    if (rec.instrument_kind == "Chain") {
        // The redeemable amount is what the consumer actually streamed.
        std::int64_t v = rec.chain.link_value.milli;
        std::uint32_t ideal = static_cast<std::uint32_t>((claim.milli + v - 1) / v);
        std::uint32_t index = std::min(ideal, rec.highest_payword);
        claim = rec.chain.link_value.times(index);
        rec.paywords_needed = index;
    } else if (rec.instrument_kind == "Confirmation") {
        claim = std::min(breakdown.total, rec.prepaid);
    }
    Money shortfall = breakdown.total > claim ? breakdown.total - claim
                                              : Money::zero(breakdown.total.currency);

    Settlement settlement;
    settlement.allocation_id = allocation_id;
    settlement.breakdown = breakdown;
    settlement.claim = claim;
    settlement.shortfall = shortfall;
    settlement.discrepancy_flagged = rec.discrepancy_flagged;
    settlement.rur_blob = rur.encode();

    // Non-repudiation: charge, rates and usage record signed together.
    Value charge_payload = Value::map();
    charge_payload.set("Breakdown", breakdown.to_value());
    charge_payload.set("Rates", rec.rates.to_value());
    charge_payload.set("RUR", settlement.rur_blob);
    charge_payload.set("Claim", claim.text());
    charge_payload.set("Shortfall", shortfall.text());
    charge_payload.set("DiscrepancyFlagged", rec.discrepancy_flagged ? 1 : 0);
    settlement.signed_charge = seal(config_.identity, charge_payload);

    // Queue the redemption claim (zero claims are skipped, and one
    // instrument+job pair never queues twice).
    if (claim.positive() && rec.instrument_kind != "Confirmation") {
        std::string dedupe = rec.instrument_id + "/" + rec.job_id;
        bool already = std::any_of(queue_.begin(), queue_.end(), [&](const QueuedClaim& q) {
            return q.dedupe_key == dedupe;
        });
        if (!already) {
            Value item = Value::map();
            if (rec.instrument_kind == "Cheque") {
                item.set("Kind", "Cheque");
                item.set("Cheque", rec.instrument_envelope.to_value());
                item.set("Claim", claim.text());
            } else {
                item.set("Kind", "Chain");
                item.set("Commitment", rec.instrument_envelope.to_value());
                item.set("Index", static_cast<std::int64_t>(rec.paywords_needed));
                item.set("Preimage", base64_encode(rec.best_preimage));
            }
            item.set("ResourceUsageRecord", blob_b64(settlement.rur_blob));
            if (config_.description)
                item.set("Description", config_.description->to_value());
            queue_.push_back({dedupe, std::move(item), 0});
        }
    }

    // GBCM removes the association and returns the account to the pool.
    pool_.release(rec.local_account);
    rec.state = AllocationState::Settled;
    return settlement;
}

std::vector<Value> Provider::redeem_batch()
{
    std::vector<QueuedClaim> batch;
    {
        std::lock_guard lock(mutex_);
        batch.assign(queue_.begin(), queue_.end());
    }
    if (batch.empty())
        return {};

    Value items = Value::list();
    for (const auto& claim : batch)
        items.push(claim.item);
    Value params = Value::map();
    params.set("Items", std::move(items));

    Value result;
    try {
        WireClient bank = WireClient::connect_endpoint(config_.bank_endpoint, config_.identity,
                                                       registry_->lookup(config_.bank_subject));
        result = bank.call("RedeemBatch", std::move(params));
    } catch (const GridBankError& e) {
        if (e.code() == Errc::UnreachableEndpoint)
            fail(Errc::BankUnreachable, config_.bank_endpoint);
        throw;
    }

    const Value::List& results = result.at("Results").as_list();
    std::vector<Value> out(results.begin(), results.end());

    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < batch.size() && i < results.size(); ++i) {
        auto it = std::find_if(queue_.begin(), queue_.end(), [&](const QueuedClaim& q) {
            return q.dedupe_key == batch[i].dedupe_key;
        });
        if (it == queue_.end())
            continue;
        if (results[i].find("Ok") != nullptr) {
            queue_.erase(it);
            continue;
        }
        const std::string& code = results[i].string_at("Error");
        if (code == errc_code(Errc::PayeeHasNoAccount)) {
            ++it->retries; // retryable once the account exists
        } else {
            queue_.erase(it); // permanent rejection, surfaced but not retried
        }
    }
    return out;
}

std::size_t Provider::redemption_queue_size() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

void Provider::record_confirmation(const Value& confirmation)
{
    std::uint64_t txn = static_cast<std::uint64_t>(confirmation.int_at("TransactionID"));
    Money amount = Money::parse(confirmation.string_at("Amount"), config_.currency);
    if (confirmation.string_at("RecipientAccountID") != config_.account_id.text())
        fail(Errc::BadMessage, "confirmation for a different account");
    std::lock_guard lock(mutex_);
    confirmations_.insert_or_assign(txn, amount);
}

bool Provider::has_confirmation(std::uint64_t transaction_id, const Money& minimum) const
{
    std::lock_guard lock(mutex_);
    auto it = confirmations_.find(transaction_id);
    return it != confirmations_.end() && !(it->second < minimum);
}

Value Provider::dispatch(const std::string& subject, const Value& body)
{
    std::int64_t request_id = 0;
    Value response = Value::map();
    try {
        request_id = body.int_at("RequestID");
        response.set("RequestID", request_id);
        const std::string& op = body.string_at("Op");
        Value empty = Value::map();
        const Value* params_ptr = body.find("Params");
        const Value& params = params_ptr != nullptr ? *params_ptr : empty;
        Value result = Value::map();

        if (op == "Hello") {
            result.set("Role", "Peer");
        } else if (op == "NegotiateRates") {
            result.set("Rates", negotiate_rates().to_value());
            result.set("ProviderAccountID", config_.account_id.text());
            result.set("ProviderSubject", config_.identity.subject);
        } else if (op == "AuthorizeAccess") {
            std::string id =
                authorize_access(subject, params.at("Instrument"),
                                 SignedEnvelope::from_value(params.at("Rates")));
            result.set("AllocationID", id);
            std::lock_guard lock(mutex_);
            result.set("LocalAccount", allocations_.at(id).local_account);
        } else if (op == "SubmitJob") {
            std::optional<DeclaredUsage> agent;
            if (const Value* agent_value = params.find("AgentUsage"))
                agent = DeclaredUsage::from_value(*agent_value);
            std::string user_host;
            if (const Value* host = params.find("UserHost"))
                user_host = host->as_string();
            JobPlan plan = begin_job(params.string_at("AllocationID"), params.string_at("JobID"),
                                     params.string_at("ApplicationName"),
                                     DeclaredUsage::from_value(params.at("Usage")), agent,
                                     user_host);
            if (plan.awaiting_paywords) {
                result.set("Status", "AwaitingPaywords");
                result.set("PaywordsNeeded", static_cast<std::int64_t>(plan.paywords_needed));
                result.set("ChainID", plan.chain_id);
            } else {
                result.set("Status", "Settled");
                result.set("Settlement",
                           settle_job(params.string_at("AllocationID")).to_value());
            }
        } else if (op == "PayWord") {
            Bytes raw = base64_decode(params.string_at("Preimage"));
            if (raw.size() != 32)
                fail(Errc::BadMessage, "preimage must be 32 bytes");
            Hash256 preimage{};
            std::copy(raw.begin(), raw.end(), preimage.begin());
            std::int64_t index = params.int_at("Index");
            if (index < 1 || index > 0xFFFFFFFF)
                fail(Errc::BadMessage, "index out of range");
            std::uint32_t accepted =
                accept_payword(params.string_at("AllocationID"),
                               static_cast<std::uint32_t>(index), preimage);
            result.set("AcceptedIndex", static_cast<std::int64_t>(accepted));
        } else if (op == "CompleteJob") {
            result.set("Status", "Settled");
            result.set("Settlement", settle_job(params.string_at("AllocationID")).to_value());
        } else if (op == "PaymentConfirmation") {
            if (subject != config_.bank_subject)
                fail(Errc::Forbidden, "confirmations come from the bank only");
            record_confirmation(params);
            result.set("Received", 1);
        } else if (op == "FlushRedemptions") {
            Value list = Value::list();
            for (auto& item : redeem_batch())
                list.push(std::move(item));
            result.set("Results", std::move(list));
        } else {
            fail(Errc::UnknownOp, op);
        }
        response.set("Result", std::move(result));
    } catch (const GridBankError& e) {
        response.set("RequestID", request_id);
        response.set("Error", std::string(errc_code(e.code())));
        response.set("Message", std::string(e.what()));
    }
    return response;
}

// --- ProviderServer --------------------------------------------------------------

ProviderServer::ProviderServer(Provider& provider, std::string listen_host,
                               std::uint16_t listen_port)
    : provider_(provider)
    , host_(std::move(listen_host))
    , listener_(TcpListener::bind(host_, listen_port))
{
}

ProviderServer::~ProviderServer()
{
    stop();
}

void ProviderServer::start()
{
    if (running_.exchange(true))
        return;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void ProviderServer::stop()
{
    if (!running_.exchange(false))
        return;
    listener_.close();
    if (accept_thread_.joinable())
        accept_thread_.join();
    std::vector<Session> sessions;
    {
        std::lock_guard lock(sessions_mutex_);
        sessions.swap(sessions_);
    }
    for (auto& session : sessions) {
        session.connection->shutdown_both();
        if (session.thread.joinable())
            session.thread.join();
    }
}

void ProviderServer::accept_loop()
{
    while (running_) {
        auto connection = std::make_shared<TcpConnection>(listener_.accept());
        if (!connection->valid())
            break;
        reap_finished_sessions();
        auto done = std::make_shared<std::atomic<bool>>(false);
        std::lock_guard lock(sessions_mutex_);
        sessions_.push_back({std::thread([this, connection, done] { session(connection, done); }),
                             connection, done});
    }
}

void ProviderServer::reap_finished_sessions()
{
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.begin();
    while (it != sessions_.end()) {
        if (it->done->load()) {
            it->thread.join();
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

void ProviderServer::session(std::shared_ptr<TcpConnection> connection_ptr,
                             std::shared_ptr<std::atomic<bool>> done)
{
    session_loop(*connection_ptr);
    connection_ptr->shutdown_both();
    done->store(true);
}

void ProviderServer::session_loop(TcpConnection& connection)
{
    // Any registered identity may talk to a provider; signature per message.
    while (running_) {
        Value response;
        try {
            auto frame = connection.recv_frame();
            if (!frame)
                return;
            SignedEnvelope envelope = SignedEnvelope::from_value(Value::parse(*frame));
            std::string subject = provider_.registry().verify_envelope(envelope);
            response = provider_.dispatch(subject, Value::parse(envelope.payload));
        } catch (const GridBankError& e) {
            response = Value::map();
            response.set("RequestID", 0);
            response.set("Error", std::string(errc_code(e.code())));
            response.set("Message", std::string(e.what()));
        } catch (const std::exception& e) {
            response = Value::map();
            response.set("RequestID", 0);
            response.set("Error", std::string(errc_code(Errc::BadMessage)));
            response.set("Message", e.what());
        }
        try {
            connection.send_frame(
                frame_envelope(provider_.config().identity, response));
        } catch (const GridBankError&) {
            return;
        }
    }
}

} // namespace gridbank
