#pragma once

#include "gridbank/estimator.hpp"
#include "gridbank/instruments.hpp"
#include "gridbank/journal.hpp"
#include "gridbank/ledger.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <set>

namespace gridbank {

struct BankConfig {
    Identity identity;                              // bank signing identity
    std::string endpoint = "127.0.0.1:0";           // advertised in instruments
    std::set<std::string> admins;                   // administrator subjects
    std::string currency = "G$";
    std::optional<std::filesystem::path> journal_path; // in-memory when absent
};

/// The bank proper: accounts layer, payment protocol layer and price
/// estimator behind one dispatch surface. Network handling lives in
/// BankServer; this class is fully usable in-process.
class Bank {
public:
    Bank(BankConfig config, std::shared_ptr<Clock> clock,
         std::shared_ptr<KeyRegistry> registry, RandomSource random = os_random());

    /// Connection gate (§ security layer): Admin, AccountHolder, or refused.
    std::optional<Role> authorize(const std::string& subject) const;

    /// Routes one validated request body {"RequestID","Op","Params"} to
    /// exactly one operation. Returns {"RequestID","Result"} or
    /// {"RequestID","Error","Message"}; never throws for request-level
    /// failures.
    Value dispatch(const std::string& subject, Role role, const Value& body);

    Ledger& ledger() { return *ledger_; }
    const Ledger& ledger() const { return *ledger_; }
    InstrumentService& instruments() { return *instruments_; }
    KeyRegistry& registry() { return *registry_; }
    Clock& clock() { return *clock_; }
    const BankConfig& config() const { return config_; }

    std::pair<std::size_t, std::size_t> sweep_expired() { return instruments_->sweep_expired(); }
    PriceEstimate estimate(const ResourceDescription& query, std::int64_t k) const;

    /// Sets the endpoint advertised inside issued instruments (needed when
    /// the listen port is ephemeral and only known after binding).
    void set_advertised_endpoint(std::string endpoint)
    {
        config_.endpoint = endpoint;
        instruments_->set_bank_endpoint(std::move(endpoint));
    }

    /// SHA-256 over the full canonical state; equal digests mean equal state.
    std::string state_digest() const;

private:
    Value execute(const std::string& subject, Role role, const std::string& op,
                  const Value& params);
    void require_owner(const std::string& subject, Role role, const AccountId& id) const;
    void require_lock_owner(const std::string& subject, Role role, std::uint64_t lock_id) const;
    Value redeem_one(const std::string& subject, const Value& item);

    BankConfig config_;
    std::shared_ptr<Clock> clock_;
    std::shared_ptr<KeyRegistry> registry_;
    std::shared_ptr<Journal> journal_;
    std::unique_ptr<Ledger> ledger_;
    std::unique_ptr<InstrumentService> instruments_;
};

} // namespace gridbank
