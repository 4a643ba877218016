#pragma once

#include "gridbank/client.hpp"
#include "gridbank/instruments.hpp"
#include "gridbank/rur.hpp"

#include <mutex>
#include <optional>

namespace gridbank {

enum class PaymentStrategy { PayBeforeUse, PayAsYouGo, PayAfterUse };

std::string_view strategy_name(PaymentStrategy s);
PaymentStrategy strategy_from_name(std::string_view name);

/// Spending ceiling the user sets to prevent overspending. committed tracks
/// funds locked in live instruments; spent tracks what providers redeemed.
struct Budget {
    Money total;
    Money committed;
    Money spent;
};

struct JobSpec {
    std::string application_name;
    std::string gsp_endpoint; // host:port
    std::string gsp_subject;
    PaymentStrategy strategy = PaymentStrategy::PayAfterUse;
    DeclaredUsage declared_usage;
    Money budget_slice;
    std::string user_host = "gsc.local";

    Value to_value() const;
    static JobSpec from_value(const Value& v);
};

struct JobReport {
    std::string job_id;
    std::string allocation_id;
    PaymentStrategy strategy = PaymentStrategy::PayAfterUse;
    // the six interaction steps, in order
    bool negotiated = false;
    bool instrument_obtained = false;
    bool access_authorized = false;
    bool job_submitted = false;
    bool settled = false;
    bool redeem_queued = false; // provider-side queue accepted the claim
    Money claim;
    Money shortfall;
    ChargeBreakdown breakdown;
    std::string rur_blob;
    std::string instrument_id;
    std::string error; // structured code, empty on success

    Value to_value() const;
};

struct ConsumerConfig {
    Identity identity;
    AccountId account_id;
    std::string bank_subject;
    std::string bank_endpoint;
    std::string host_name = "gsc.local";
    Money default_link_value = Money::from_milli(500);  // 0.500 G$ per payword
    Quantity payg_quantum = Quantity::from_micro(100'000); // 0.1 CPU-hour
    std::int64_t instrument_ttl_seconds = 3600;
};

/// GridBank Payment Module: acquires instruments within the budget, runs the
/// job-submission flow against a provider, and keeps instrument accounting
/// aligned with the bank's locked balances.
class PaymentModule {
public:
    PaymentModule(ConsumerConfig config, std::shared_ptr<Clock> clock,
                  std::shared_ptr<KeyRegistry> registry);

    void set_budget(const Money& amount);
    Budget budget() const;

    /// Obtains (or pre-books, for pay-before-use) an instrument worth
    /// `amount` for the named provider; returns the instrument id.
    std::string request_instrument(PaymentStrategy strategy, const std::string& gsp_subject,
                                   const Money& amount);

    /// The full interaction sequence: negotiate, pay/forward instrument,
    /// submit, stream paywords when paying as you go, and take the signed
    /// charge. Failures leave budget accounting consistent.
    JobReport submit_job(const JobSpec& job);

    /// Mirrors the bank account API with stored identity and connection.
    Value account_passthrough(std::string_view op, Value params);

    /// Releases budget headroom held by instruments that expired without
    /// (full) redemption; call after the bank's expiry sweep.
    void expire_instruments();

    const ConsumerConfig& config() const { return config_; }

private:
    struct InstrumentRec {
        std::string id;
        PaymentStrategy strategy;
        std::string gsp_subject;
        SignedEnvelope envelope;
        Money slice;          // budget committed for this instrument
        Money redeemed;       // moved from committed to spent
        std::uint32_t links = 0;
        Money link_value;
        std::vector<Hash256> paywords; // [w_1 .. w_N]
        Timestamp expires_at = 0;
        bool consumed = false; // job ran against it
        bool released = false; // committed remainder returned
    };

    WireClient& bank();
    InstrumentRec& instrument_ref(const std::string& id);
    std::string acquire_instrument(PaymentStrategy strategy, const std::string& gsp_subject,
                                   const Money& amount); // callers hold mutex_

    ConsumerConfig config_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<KeyRegistry> registry_;
    std::optional<WireClient> bank_;

    mutable std::recursive_mutex mutex_;
    Budget budget_;
    std::map<std::string, InstrumentRec> instruments_;
    std::uint64_t next_job_ = 1;
    std::uint64_t next_prepay_ = 1;
};

} // namespace gridbank
