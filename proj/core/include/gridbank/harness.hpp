#pragma once

#include "gridbank/bank.hpp"
#include "gridbank/gsc.hpp"
#include "gridbank/gsp.hpp"
#include "gridbank/server.hpp"

#include <filesystem>

namespace gridbank {

/// Declarative end-to-end scenario: participants with initial deposits,
/// provider configurations, a job list and optional price-estimate queries.
/// Runs are deterministic for a fixed seed.
struct Scenario {
    struct Participant {
        std::string subject;
        std::string organization;
        Money deposit;
        std::string host_name;
    };
    struct ProviderSpec {
        std::string subject;
        std::map<ChargeItem, Quantity> rates;
        std::int64_t rates_ttl_seconds = 3600;
        int pool_size = 4;
        std::string host_type;
        std::optional<ResourceDescription> description;
    };
    struct JobSpecEntry {
        std::string consumer;
        std::string provider;
        std::string application;
        PaymentStrategy strategy = PaymentStrategy::PayAfterUse;
        DeclaredUsage usage;
        Money budget_slice;
    };
    struct EstimateQuery {
        ResourceDescription description;
        std::int64_t k = 1;
    };

    std::string name;
    std::vector<Participant> participants;
    std::vector<ProviderSpec> providers;
    std::vector<JobSpecEntry> jobs;
    std::vector<EstimateQuery> estimates;
    std::map<std::string, Money> budgets; // consumer subject -> budget total
    std::uint64_t seed = 1;
    std::string currency = "G$";
    std::int64_t instrument_ttl_seconds = 86'400;
    Money link_value = Money::from_milli(500);

    static Scenario from_value(const Value& v);
    static Scenario load(const std::filesystem::path& path);
};

struct ScenarioReport {
    Value report;

    std::string canonical_text() const { return report.encode() + "\n"; }
    Money imbalance() const;
    bool conservation_holds() const;
    const Value& jobs() const { return report.at("Jobs"); }
};

/// Boots one bank and the configured providers/consumers as in-process
/// nodes over real sockets, runs every job, forces batch redemption and the
/// expiry sweep, then recomputes the report from the ledger.
ScenarioReport run_scenario(const Scenario& scenario, const std::filesystem::path& work_dir);

/// Co-operative balance metric: the largest per-account gap between value
/// provided and value consumed.
Money report_coop_balance(const ScenarioReport& report);

} // namespace gridbank
