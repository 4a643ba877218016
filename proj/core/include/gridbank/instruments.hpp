#pragma once

#include "gridbank/identity.hpp"
#include "gridbank/ledger.hpp"
#include "gridbank/money.hpp"
#include "gridbank/rur.hpp"

#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

namespace gridbank {

/// Payee-bound, bank-signed payment order for the pay-after-use strategy.
/// Backed by a live ledger lock for the full limit; redeemable at most once.
struct GridCheque {
    std::string cheque_id;
    AccountId drawer_account_id;
    std::string payee_subject;
    std::string bank_endpoint;
    Money amount_limit;
    std::uint64_t lock_id = 0;
    Timestamp issued_at = 0;
    Timestamp expires_at = 0;

    Value to_value() const;
    static GridCheque from_value(const Value& v);
};

/// PayWord-style chain commitment: the root w0 of N successive SHA-256
/// applications to a random secret. The full chain value is locked at
/// issuance, so the drawer can never overspend.
struct HashChainCommitment {
    std::string chain_id;
    AccountId drawer_account_id;
    std::string payee_subject;
    Hash256 root{}; // w0
    std::uint32_t length = 0;
    Money link_value;
    std::uint64_t lock_id = 0;
    Timestamp issued_at = 0;
    Timestamp expires_at = 0;

    Value to_value() const;
    static HashChainCommitment from_value(const Value& v);
};

/// One revealed preimage: applying SHA-256 `index` times to it must
/// reproduce the commitment root. Worth index x link_value cumulatively.
struct PayWord {
    std::string chain_id;
    std::uint32_t index = 0;
    Hash256 preimage{};
};

enum class ChequeCheck { Valid, BadSignature, WrongPayee, Expired, AlreadyRedeemed };
enum class PaywordCheck { Valid, BadPreimage, StaleIndex, IndexOverflow, Expired };

std::string_view cheque_check_name(ChequeCheck c);
std::string_view payword_check_name(PaywordCheck c);

/// w_{i-1} = H(w_i) chain arithmetic, shared by issuer and verifiers.
bool payword_matches_root(const Hash256& root, std::uint32_t index, const Hash256& preimage);

/// Structure/signature/payee/expiry checks a payee can run without bank
/// state (the bank additionally tracks redemption state).
ChequeCheck check_cheque_envelope(const KeyRegistry& registry, const std::string& bank_subject,
                                  const SignedEnvelope& envelope,
                                  const std::string& presenting_subject, Timestamp now,
                                  GridCheque* parsed = nullptr);
bool check_commitment_envelope(const KeyRegistry& registry, const std::string& bank_subject,
                               const SignedEnvelope& envelope, HashChainCommitment* parsed = nullptr);

/// Hardware profile a provider attaches to settlements so the bank can
/// estimate market rates for similar resources.
struct ResourceDescription {
    std::int64_t cpu_count = 0;
    Quantity cpu_speed_ghz;
    std::int64_t memory_mb = 0;
    std::int64_t storage_gb = 0;
    Quantity bandwidth_mbps;

    Value to_value() const;
    static ResourceDescription from_value(const Value& v);
};

struct PriceSample {
    ResourceDescription description;
    Quantity rate; // G$ per CPU hour
};

struct RedemptionResult {
    std::uint64_t transaction_id = 0;
    Money amount;
    std::uint32_t chain_index = 0; // chains only
};

/// Bank-side payment protocol state for both instruments. Shares the
/// ledger's serialization point: verify-and-pay is atomic per instrument,
/// and every state change is journaled for crash recovery.
class InstrumentService {
public:
    InstrumentService(Ledger& ledger, KeyRegistry& registry, Identity bank_identity,
                      std::string bank_endpoint, std::shared_ptr<Clock> clock,
                      std::shared_ptr<Journal> journal, RandomSource random = os_random());

    SignedEnvelope issue_cheque(const AccountId& drawer, const std::string& payee_subject,
                                const Money& amount_limit, std::int64_t ttl_seconds);
    ChequeCheck verify_cheque(const SignedEnvelope& envelope,
                              const std::string& presenting_subject, Timestamp now,
                              GridCheque* parsed = nullptr) const;
    RedemptionResult redeem_cheque(const SignedEnvelope& envelope, const Money& claimed,
                                   const std::string& rur_blob, const std::string& presenter,
                                   const std::optional<ResourceDescription>& description = {});

    SignedEnvelope issue_hash_chain(const AccountId& drawer, const std::string& payee_subject,
                                    std::uint32_t n_links, const Money& link_value,
                                    std::int64_t ttl_seconds, std::vector<Hash256>& secrets_out);
    PaywordCheck verify_payword(const HashChainCommitment& commitment, const PayWord& payword,
                                std::uint32_t last_accepted_index, Timestamp now) const;
    RedemptionResult redeem_hash_chain(const SignedEnvelope& envelope, const PayWord& payword,
                                       const std::string& rur_blob, const std::string& presenter,
                                       const std::optional<ResourceDescription>& description = {});

    /// Releases locks of expired unredeemed cheques and expired chains;
    /// returns (cheques swept, chains swept).
    std::pair<std::size_t, std::size_t> sweep_expired();

    std::uint32_t chain_redeemed_index(const std::string& chain_id) const;

    const std::vector<PriceSample>& price_history() const { return price_history_; }
    void replay_event(const Value& event);
    static bool owns_event(std::string_view record_kind);
    Value state_value() const;

    const Identity& bank_identity() const { return bank_identity_; }
    const std::string& bank_endpoint() const { return bank_endpoint_; }
    void set_bank_endpoint(std::string endpoint) { bank_endpoint_ = std::move(endpoint); }

private:
    struct ChequeState {
        GridCheque cheque;
        bool redeemed = false;
        bool expired_swept = false;
        Money redeemed_amount;
    };
    struct ChainState {
        HashChainCommitment commitment;
        std::uint32_t highest_redeemed = 0;
        bool expired_swept = false;
    };

    void apply_event(const Value& event);
    void commit(const Value& event);
    AccountId payee_account(const std::string& payee_subject) const;
    void record_price_sample(const std::optional<ResourceDescription>& description,
                             const std::string& rur_blob, const Money& amount);

    Ledger& ledger_;
    KeyRegistry& registry_;
    Identity bank_identity_;
    std::string bank_endpoint_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<Journal> journal_;
    RandomSource random_;

    mutable std::recursive_mutex mutex_;
    std::map<std::string, ChequeState> cheques_;
    std::map<std::string, ChainState> chains_;
    std::vector<PriceSample> price_history_;
    std::uint64_t next_cheque_serial_ = 1;
    std::uint64_t next_chain_serial_ = 1;
};

} // namespace gridbank
