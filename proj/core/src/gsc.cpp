#include "gridbank/gsc.hpp"

#include "gridbank/errors.hpp"

namespace gridbank {

std::string_view strategy_name(PaymentStrategy s)
{
    switch (s) {
    case PaymentStrategy::PayBeforeUse: return "PayBeforeUse";
    case PaymentStrategy::PayAsYouGo: return "PayAsYouGo";
    case PaymentStrategy::PayAfterUse: return "PayAfterUse";
    }
    return "PayAfterUse";
}

PaymentStrategy strategy_from_name(std::string_view name)
{
    if (name == "PayBeforeUse")
        return PaymentStrategy::PayBeforeUse;
    if (name == "PayAsYouGo")
        return PaymentStrategy::PayAsYouGo;
    if (name == "PayAfterUse")
        return PaymentStrategy::PayAfterUse;
    fail(Errc::BadMessage, "unknown strategy '" + std::string(name) + "'");
}

Value JobSpec::to_value() const
{
    Value v = Value::map();
    v.set("ApplicationName", application_name);
    v.set("GSPEndpoint", gsp_endpoint);
    v.set("GSPSubject", gsp_subject);
    v.set("Strategy", std::string(strategy_name(strategy)));
    v.set("Usage", declared_usage.to_value());
    v.set("BudgetSlice", budget_slice.text());
    v.set("UserHost", user_host);
    return v;
}

JobSpec JobSpec::from_value(const Value& v)
{
    JobSpec spec;
    spec.application_name = v.string_at("ApplicationName");
    spec.gsp_endpoint = v.string_at("GSPEndpoint");
    spec.gsp_subject = v.string_at("GSPSubject");
    spec.strategy = strategy_from_name(v.string_at("Strategy"));
    spec.declared_usage = DeclaredUsage::from_value(v.at("Usage"));
    spec.budget_slice = Money::parse(v.string_at("BudgetSlice"));
    if (const Value* host = v.find("UserHost"))
        spec.user_host = host->as_string();
    if (!spec.budget_slice.positive())
        fail(Errc::BadMessage, "budget slice must be positive");
    return spec;
}

Value JobReport::to_value() const
{
    Value steps = Value::map();
    steps.set("Negotiated", negotiated ? 1 : 0);
    steps.set("InstrumentObtained", instrument_obtained ? 1 : 0);
    steps.set("AccessAuthorized", access_authorized ? 1 : 0);
    steps.set("JobSubmitted", job_submitted ? 1 : 0);
    steps.set("Settled", settled ? 1 : 0);
    steps.set("RedeemQueued", redeem_queued ? 1 : 0);

    Value v = Value::map();
    v.set("JobID", job_id);
    v.set("AllocationID", allocation_id);
    v.set("Strategy", std::string(strategy_name(strategy)));
    v.set("Steps", std::move(steps));
    v.set("Claim", claim.text());
    v.set("Shortfall", shortfall.text());
    v.set("Breakdown", breakdown.to_value());
    v.set("InstrumentID", instrument_id);
    v.set("Error", error);
    return v;
}

PaymentModule::PaymentModule(ConsumerConfig config, std::shared_ptr<Clock> clock,
                             std::shared_ptr<KeyRegistry> registry)
    : config_(std::move(config))
    , clock_(std::move(clock))
    , registry_(std::move(registry))
{
    budget_.total = Money::zero(config_.default_link_value.currency);
    budget_.committed = budget_.total;
    budget_.spent = budget_.total;
}

WireClient& PaymentModule::bank()
{
    if (!bank_ || !bank_->connected()) {
        bank_.emplace(WireClient::connect_endpoint(config_.bank_endpoint, config_.identity,
                                                   registry_->lookup(config_.bank_subject)));
    }
    return *bank_;
}

void PaymentModule::set_budget(const Money& amount)
{
    std::lock_guard lock(mutex_);
    if (amount < budget_.committed + budget_.spent)
        fail(Errc::BelowCommitted,
             "budget below committed " + budget_.committed.text() + " + spent " +
                 budget_.spent.text());
    budget_.total = amount;
}

Budget PaymentModule::budget() const
{
    std::lock_guard lock(mutex_);
    return budget_;
}

PaymentModule::InstrumentRec& PaymentModule::instrument_ref(const std::string& id)
{
    auto it = instruments_.find(id);
    if (it == instruments_.end())
        fail(Errc::BadParameters, "unknown instrument " + id);
    return it->second;
}

std::string PaymentModule::request_instrument(PaymentStrategy strategy,
                                              const std::string& gsp_subject, const Money& amount)
{
    std::lock_guard lock(mutex_);
    return acquire_instrument(strategy, gsp_subject, amount);
}

std::string PaymentModule::acquire_instrument(PaymentStrategy strategy,
                                              const std::string& gsp_subject, const Money& amount)
{
    if (!amount.positive())
        fail(Errc::NonPositiveAmount);
    if (budget_.committed + budget_.spent + amount > budget_.total)
        fail(Errc::BudgetExceeded,
             "requested " + amount.text() + " over remaining budget headroom");

    InstrumentRec rec;
    rec.strategy = strategy;
    rec.gsp_subject = gsp_subject;

    if (strategy == PaymentStrategy::PayAfterUse) {
        Value params = Value::map();
        params.set("DrawerAccountID", config_.account_id.text());
        params.set("PayeeCertificateName", gsp_subject);
        params.set("AmountLimit", amount.text());
        params.set("TTLSeconds", config_.instrument_ttl_seconds);
        Value result = bank().call("IssueCheque", std::move(params));
        rec.envelope = SignedEnvelope::from_value(result.at("Cheque"));
        GridCheque cheque = GridCheque::from_value(Value::parse(rec.envelope.payload));
        rec.id = cheque.cheque_id;
        rec.slice = amount;
        rec.expires_at = cheque.expires_at;
    } else if (strategy == PaymentStrategy::PayAsYouGo) {
        std::int64_t links = amount.milli / config_.default_link_value.milli;
        if (links < 1)
            fail(Errc::BadParameters, "amount below one payword link");
        Value params = Value::map();
        params.set("DrawerAccountID", config_.account_id.text());
        params.set("PayeeCertificateName", gsp_subject);
        params.set("Links", links);
        params.set("LinkValue", config_.default_link_value.text());
        params.set("TTLSeconds", config_.instrument_ttl_seconds);
        Value result = bank().call("IssueHashChain", std::move(params));
        rec.envelope = SignedEnvelope::from_value(result.at("Commitment"));
        HashChainCommitment commitment =
            HashChainCommitment::from_value(Value::parse(rec.envelope.payload));
        rec.id = commitment.chain_id;
        rec.links = commitment.length;
        rec.link_value = commitment.link_value;
        rec.slice = commitment.link_value.times(commitment.length);
        rec.expires_at = commitment.expires_at;
        for (const auto& word : result.at("Paywords").as_list()) {
            Bytes raw = base64_decode(word.as_string());
            if (raw.size() != 32)
                fail(Errc::BadMessage, "malformed payword secret");
            Hash256 h{};
            std::copy(raw.begin(), raw.end(), h.begin());
            rec.paywords.push_back(h);
        }
    } else {
        // Pay before use: nothing is issued now, the transfer happens at
        // submission. The slice still counts as committed.
        rec.id = "PRE-" + std::to_string(next_prepay_++);
        rec.slice = amount;
        rec.expires_at = clock_->now() + config_.instrument_ttl_seconds;
    }

    budget_.committed += rec.slice;
    std::string id = rec.id;
    instruments_.emplace(id, std::move(rec));
    return id;
}

JobReport PaymentModule::submit_job(const JobSpec& job)
{
    std::lock_guard lock(mutex_);
    JobReport report;
    report.strategy = job.strategy;
    report.job_id = config_.account_id.text() + "/JOB-" + std::to_string(next_job_++);
    report.claim = Money::zero(job.budget_slice.currency);
    report.shortfall = report.claim;
    report.breakdown.total = report.claim;

    std::string instrument_id;
    try {
        WireClient gsp = WireClient::connect_endpoint(job.gsp_endpoint, config_.identity);

        // 1. negotiate service rates
        Value negotiated = gsp.call("NegotiateRates", Value::map());
        SignedEnvelope rates_envelope = SignedEnvelope::from_value(negotiated.at("Rates"));
        if (rates_envelope.signer != job.gsp_subject)
            fail(Errc::BadSignature, "rates quoted by a different provider");
        registry_->verify_envelope(rates_envelope);
        ChargeableRates rates = ChargeableRates::from_value(Value::parse(rates_envelope.payload));
        if (rates.expired(clock_->now()))
            fail(Errc::RatesExpired, "provider rates lapsed");
        AccountId provider_account = AccountId::parse(negotiated.string_at("ProviderAccountID"));
        report.negotiated = true;

        // 2. obtain the payment instrument (or reuse an unconsumed one)
        for (auto& [id, rec] : instruments_) {
            if (!rec.consumed && !rec.released && rec.strategy == job.strategy &&
                rec.gsp_subject == job.gsp_subject && !(rec.slice < job.budget_slice)) {
                instrument_id = id;
                break;
            }
        }
        if (instrument_id.empty())
            instrument_id = acquire_instrument(job.strategy, job.gsp_subject, job.budget_slice);
        InstrumentRec& instrument = instrument_ref(instrument_id);
        report.instrument_id = instrument_id;

        Value instrument_ref_value = Value::map();
        if (job.strategy == PaymentStrategy::PayBeforeUse) {
            // fixed price paid up front; the bank confirms to the provider
            Value params = Value::map();
            params.set("DrawerAccountID", config_.account_id.text());
            params.set("RecipientAccountID", provider_account.text());
            params.set("Amount", instrument.slice.text());
            params.set("ConfirmationEndpoint", job.gsp_endpoint);
            Value result = bank().call("DirectTransferPayment", std::move(params));
            if (result.int_at("ConfirmationDelivered") != 1)
                fail(Errc::UnreachableEndpoint, "payment confirmation undeliverable");
            instrument.consumed = true;
            instrument.redeemed = instrument.slice;
            budget_.committed -= instrument.slice;
            budget_.spent += instrument.slice;
            instrument.released = true;
            instrument_ref_value.set("Kind", "Confirmation");
            instrument_ref_value.set("TransactionID", result.int_at("TransactionID"));
            instrument_ref_value.set("Amount", instrument.slice.text());
        } else if (job.strategy == PaymentStrategy::PayAfterUse) {
            instrument_ref_value.set("Kind", "Cheque");
            instrument_ref_value.set("Cheque", instrument.envelope.to_value());
        } else {
            instrument_ref_value.set("Kind", "Chain");
            instrument_ref_value.set("Commitment", instrument.envelope.to_value());
        }
        report.instrument_obtained = true;

        // 3. forward the instrument to the charging module
        Value auth_params = Value::map();
        auth_params.set("Instrument", std::move(instrument_ref_value));
        auth_params.set("Rates", rates_envelope.to_value());
        Value auth = gsp.call("AuthorizeAccess", std::move(auth_params));
        report.allocation_id = auth.string_at("AllocationID");
        report.access_authorized = true;

        // 4. submit the job (the Grid Agent echoes declared usage)
        Value submit_params = Value::map();
        submit_params.set("AllocationID", report.allocation_id);
        submit_params.set("JobID", report.job_id);
        submit_params.set("ApplicationName", job.application_name);
        submit_params.set("Usage", job.declared_usage.to_value());
        submit_params.set("AgentUsage", job.declared_usage.to_value());
        submit_params.set("UserHost", job.user_host);
        Value submitted = gsp.call("SubmitJob", std::move(submit_params));
        report.job_submitted = true;

        // 5. stream paywords per usage quantum until the owed index is covered
        Value settlement_value;
        if (submitted.string_at("Status") == "AwaitingPaywords") {
            std::int64_t needed = submitted.int_at("PaywordsNeeded");
            if (needed > static_cast<std::int64_t>(instrument.paywords.size()))
                fail(Errc::ExceedsLimit, "provider expects more paywords than the chain holds");
            for (std::int64_t index = 1; index <= needed; ++index) {
                Value word = Value::map();
                word.set("AllocationID", report.allocation_id);
                word.set("Index", index);
                word.set("Preimage",
                         base64_encode(instrument.paywords[static_cast<std::size_t>(index - 1)]));
                gsp.call("PayWord", std::move(word));
            }
            Value complete = Value::map();
            complete.set("AllocationID", report.allocation_id);
            Value completed = gsp.call("CompleteJob", std::move(complete));
            settlement_value = completed.at("Settlement");
        } else {
            settlement_value = submitted.at("Settlement");
        }

        // 6. take the signed charge and reconcile the budget
        SignedEnvelope charge_envelope =
            SignedEnvelope::from_value(settlement_value.at("SignedCharge"));
        if (charge_envelope.signer != job.gsp_subject)
            fail(Errc::BadSignature, "charge signed by a different provider");
        registry_->verify_envelope(charge_envelope);
        Value charge_payload = Value::parse(charge_envelope.payload);
        report.breakdown = ChargeBreakdown::from_value(charge_payload.at("Breakdown"));
        report.rur_blob = charge_payload.string_at("RUR");
        report.claim = Money::parse(settlement_value.string_at("Claim"), job.budget_slice.currency);
        report.shortfall =
            Money::parse(settlement_value.string_at("Shortfall"), job.budget_slice.currency);
        report.settled = true;
        report.redeem_queued = report.claim.positive();

        if (job.strategy == PaymentStrategy::PayAfterUse) {
            // single-shot cheque: claim becomes spend, remainder is released
            // at redemption and returns as headroom immediately
            instrument.consumed = true;
            instrument.redeemed = report.claim;
            budget_.committed -= instrument.slice;
            budget_.spent += report.claim;
            instrument.released = true;
        } else if (job.strategy == PaymentStrategy::PayAsYouGo) {
            // redeemed links become spend; the unspent tail stays committed
            // until the chain expires and the bank releases the lock
            instrument.consumed = true;
            instrument.redeemed = report.claim;
            budget_.committed -= report.claim;
            budget_.spent += report.claim;
        }
    } catch (const GridBankError& e) {
        report.error = std::string(errc_code(e.code()));
    }
    return report;
}

Value PaymentModule::account_passthrough(std::string_view op, Value params)
{
    static constexpr std::string_view k_mirrored[] = {"CreateAccount", "GetAccount",
                                                      "UpdateAccount", "Statement"};
    bool known = false;
    for (auto candidate : k_mirrored)
        known = known || candidate == op;
    if (!known)
        fail(Errc::UnknownOp, std::string(op));

    std::lock_guard lock(mutex_);
    if (op != "CreateAccount" && params.find("AccountID") == nullptr)
        params.set("AccountID", config_.account_id.text());
    return bank().call_raw(op, std::move(params));
}

void PaymentModule::expire_instruments()
{
    std::lock_guard lock(mutex_);
    Timestamp now = clock_->now();
    for (auto& [id, rec] : instruments_) {
        if (rec.released || now < rec.expires_at)
            continue;
        Money still_committed = rec.slice - rec.redeemed;
        if (still_committed.positive())
            budget_.committed -= still_committed;
        rec.released = true;
    }
}

} // namespace gridbank
