#pragma once

#include "gridbank/client.hpp"
#include "gridbank/instruments.hpp"
#include "gridbank/rur.hpp"
#include "gridbank/wire.hpp"

#include <atomic>
#include <deque>
#include <filesystem>
#include <optional>
#include <thread>

namespace gridbank {

/// Pool of pre-created local accounts dynamically mapped to consumers for a
/// job's duration. Each live mapping is mirrored as one line of the mapfile
/// (`"subject" local_account`); parsing the mapfile always reproduces the
/// active mapping set exactly.
class TemplateAccountPool {
public:
    struct Mapping {
        std::string local_account;
        std::string consumer_subject;
        std::string instrument_id;
        Timestamp allocated_at = 0;
    };

    TemplateAccountPool(std::vector<std::string> accounts, std::filesystem::path mapfile);

    /// Draws a free account; PoolExhausted when none is free, BadParameters
    /// for a duplicate live (consumer, instrument) pair.
    std::string allocate(const std::string& consumer_subject, const std::string& instrument_id,
                         Timestamp now);
    void release(const std::string& local_account);

    std::size_t size() const;
    std::size_t free_count() const;
    std::vector<Mapping> active() const;

    static std::vector<std::pair<std::string, std::string>>
    parse_mapfile(const std::filesystem::path& path); // (subject, local_account) pairs

private:
    void rewrite_mapfile() const;

    mutable std::mutex mutex_;
    std::vector<std::string> accounts_;
    std::vector<std::string> free_;
    std::map<std::string, Mapping> active_; // keyed by local account
    std::filesystem::path mapfile_;
};

enum class AllocationState { Active, Settled };

struct ProviderConfig {
    Identity identity;
    AccountId account_id;
    std::string bank_subject;
    std::string bank_endpoint; // host:port
    std::string host_name = "gsp.local";
    std::string host_type; // optional, e.g. "Cluster/Linux"
    std::map<ChargeItem, Quantity> rates;
    std::string currency = "G$";
    std::int64_t rates_ttl_seconds = 3600;
    std::vector<std::string> pool_accounts = {"grid0001", "grid0002", "grid0003", "grid0004"};
    std::filesystem::path mapfile = "grid-mapfile";
    std::optional<ResourceDescription> description; // attached to settlements

    Value to_value() const;
    static ProviderConfig from_value(const Value& v, const std::filesystem::path& base_dir);
};

struct Settlement {
    std::string allocation_id;
    SignedEnvelope signed_charge;
    ChargeBreakdown breakdown;
    Money claim;     // what will be redeemed, capped at instrument capacity
    Money shortfall; // charge beyond the instrument's capacity
    bool discrepancy_flagged = false;
    std::string rur_blob;

    Value to_value() const;
};

/// Provider-side components in one object: the trade service quoting signed
/// rates, the charging module validating instruments and settling jobs over
/// the template-account pool, and the resource meter stamping usage records.
class Provider {
public:
    Provider(ProviderConfig config, std::shared_ptr<Clock> clock,
             std::shared_ptr<KeyRegistry> registry);

    // GTS: posted-price model; accept or re-negotiate later, nothing fancier.
    SignedEnvelope negotiate_rates();
    ChargeableRates current_rates() const;

    /// GBCM entry: validates the payment instrument and the rates offer,
    /// then maps a template account to the consumer.
    std::string authorize_access(const std::string& consumer_subject, const Value& instrument_ref,
                                 const SignedEnvelope& rates_envelope);

    /// GRM: stamps the local job id on declared usage; flags settlements
    /// whose declared figures drift more than 5% from the agent's.
    RawUsage meter_job(const std::string& allocation_id, const DeclaredUsage& declared,
                       const std::optional<DeclaredUsage>& agent_usage);

    /// Registers job details and (for pay-as-you-go) the number of paywords
    /// the consumer still owes before completion.
    struct JobPlan {
        std::uint32_t paywords_needed = 0;
        std::string chain_id;
        bool awaiting_paywords = false;
    };
    JobPlan begin_job(const std::string& allocation_id, const std::string& job_id,
                      const std::string& application_name, const DeclaredUsage& declared,
                      const std::optional<DeclaredUsage>& agent_usage,
                      const std::string& user_host);

    std::uint32_t accept_payword(const std::string& allocation_id, std::uint32_t index,
                                 const Hash256& preimage);

    /// Computes the charge, signs it, queues the redemption claim, frees the
    /// template account and deletes the mapfile entry.
    Settlement settle_job(const std::string& allocation_id);

    /// Sends every queued claim to the bank in one batch message; successes
    /// leave the queue, permanent rejections are surfaced and dropped,
    /// retryable ones stay with a bumped retry counter.
    std::vector<Value> redeem_batch();
    std::size_t redemption_queue_size() const;

    void record_confirmation(const Value& confirmation);
    bool has_confirmation(std::uint64_t transaction_id, const Money& minimum) const;

    TemplateAccountPool& pool() { return pool_; }
    const ProviderConfig& config() const { return config_; }
    const KeyRegistry& registry() const { return *registry_; }

    Value dispatch(const std::string& subject, const Value& body);

private:
    struct AllocationRec {
        std::string allocation_id;
        std::string local_account;
        std::string consumer_subject;
        std::string instrument_kind; // Cheque | Chain | Confirmation
        std::string instrument_id;
        SignedEnvelope instrument_envelope;
        GridCheque cheque;
        HashChainCommitment chain;
        Money prepaid;
        ChargeableRates rates;
        AllocationState state = AllocationState::Active;
        // job bookkeeping
        std::string job_id;
        std::string application_name;
        std::string user_host;
        std::string local_job_id;
        DeclaredUsage declared;
        bool has_job = false;
        bool discrepancy_flagged = false;
        Timestamp wall_start = 0;
        std::uint32_t paywords_needed = 0;
        std::uint32_t highest_payword = 0;
        Hash256 best_preimage{};
    };

    struct QueuedClaim {
        std::string dedupe_key; // instrument id + job id
        Value item;             // RedeemBatch item
        int retries = 0;
    };

    AllocationRec& allocation_ref(const std::string& allocation_id);
    Money instrument_capacity(const AllocationRec& allocation) const;

    ProviderConfig config_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<KeyRegistry> registry_;
    TemplateAccountPool pool_;

    mutable std::mutex mutex_;
    std::map<std::string, AllocationRec> allocations_;
    std::deque<QueuedClaim> queue_;
    std::map<std::uint64_t, Money> confirmations_; // txn id -> amount received
    std::uint64_t next_allocation_ = 1;
    std::uint64_t next_local_job_ = 1;
};

/// Socket front for the provider: consumers negotiate, forward instruments,
/// submit jobs and stream paywords; the bank delivers payment confirmations.
class ProviderServer {
public:
    ProviderServer(Provider& provider, std::string listen_host, std::uint16_t listen_port);
    ~ProviderServer();

    void start();
    void stop();
    std::uint16_t port() const { return listener_.port(); }
    std::string endpoint() const { return host_ + ":" + std::to_string(port()); }

private:
    struct Session {
        std::thread thread;
        std::shared_ptr<TcpConnection> connection;
        std::shared_ptr<std::atomic<bool>> done;
    };

    void accept_loop();
    void reap_finished_sessions();
    void session(std::shared_ptr<TcpConnection> connection,
                 std::shared_ptr<std::atomic<bool>> done);
    void session_loop(TcpConnection& connection);

    Provider& provider_;
    std::string host_;
    TcpListener listener_;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex sessions_mutex_;
    std::vector<Session> sessions_;
};

} // namespace gridbank
