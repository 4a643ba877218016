#include "gridbank/harness.hpp"

#include "gridbank/errors.hpp"

#include <fstream>
#include <sstream>

namespace gridbank {

namespace {

constexpr std::string_view k_bank_subject = "CN=GridBank,O=GridBank";
constexpr std::string_view k_admin_subject = "CN=Admin,O=GridBank";
constexpr std::string_view k_start_of_time = "2002-08-23T00:00:00Z";

std::map<ChargeItem, Quantity> rates_from_value(const Value& v)
{
    std::map<ChargeItem, Quantity> rates;
    for (ChargeItem item : k_all_charge_items) {
        if (const Value* rate = v.find(charge_item_name(item)))
            rates.emplace(item, Quantity::parse(rate->as_string()));
    }
    return rates;
}

} // namespace

Scenario Scenario::from_value(const Value& v)
{
    Scenario s;
    s.name = v.string_at("Name");
    s.currency = v.find("Currency") != nullptr ? v.string_at("Currency") : "G$";
    if (const Value* seed = v.find("Seed"))
        s.seed = static_cast<std::uint64_t>(seed->as_int());
    if (const Value* ttl = v.find("InstrumentTTLSeconds"))
        s.instrument_ttl_seconds = ttl->as_int();
    if (const Value* link = v.find("LinkValue"))
        s.link_value = Money::parse(link->as_string(), s.currency);

    for (const auto& p : v.at("Participants").as_list()) {
        Participant participant;
        participant.subject = p.string_at("Subject");
        participant.organization =
            p.find("Organization") != nullptr ? p.string_at("Organization") : "";
        participant.deposit = Money::parse(p.string_at("Deposit"), s.currency);
        participant.host_name =
            p.find("HostName") != nullptr ? p.string_at("HostName") : participant.subject;
        s.participants.push_back(std::move(participant));
    }
    if (const Value* providers = v.find("Providers")) {
        for (const auto& p : providers->as_list()) {
            ProviderSpec spec;
            spec.subject = p.string_at("Subject");
            spec.rates = rates_from_value(p.at("Rates"));
            if (const Value* ttl = p.find("RatesTTLSeconds"))
                spec.rates_ttl_seconds = ttl->as_int();
            if (const Value* pool = p.find("PoolSize"))
                spec.pool_size = static_cast<int>(pool->as_int());
            if (const Value* host_type = p.find("HostType"))
                spec.host_type = host_type->as_string();
            if (const Value* description = p.find("Description"))
                spec.description = ResourceDescription::from_value(*description);
            s.providers.push_back(std::move(spec));
        }
    }
    if (const Value* jobs = v.find("Jobs")) {
        for (const auto& j : jobs->as_list()) {
            JobSpecEntry job;
            job.consumer = j.string_at("Consumer");
            job.provider = j.string_at("Provider");
            job.application = j.find("Application") != nullptr ? j.string_at("Application")
                                                               : "grid-application";
            job.strategy = strategy_from_name(j.string_at("Strategy"));
            job.usage = DeclaredUsage::from_value(j.at("Usage"));
            job.budget_slice = Money::parse(j.string_at("BudgetSlice"), s.currency);
            s.jobs.push_back(std::move(job));
        }
    }
    if (const Value* estimates = v.find("Estimates")) {
        for (const auto& e : estimates->as_list()) {
            EstimateQuery query;
            query.description = ResourceDescription::from_value(e.at("Description"));
            query.k = e.int_at("K");
            s.estimates.push_back(std::move(query));
        }
    }
    if (const Value* budgets = v.find("Budgets")) {
        for (const auto& [subject, amount] : budgets->as_map())
            s.budgets.emplace(subject, Money::parse(amount.as_string(), s.currency));
    }
    return s;
}

Scenario Scenario::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(Errc::ConfigError, "cannot read scenario " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return from_value(Value::parse(buf.str()));
    } catch (const GridBankError& e) {
        fail(Errc::ConfigError, "scenario " + path.string() + ": " + e.what());
    }
}

Money ScenarioReport::imbalance() const
{
    const Value& conservation = report.at("Conservation");
    return Money::parse(report.string_at("Imbalance"), conservation.string_at("Currency"));
}

bool ScenarioReport::conservation_holds() const
{
    return report.at("Conservation").int_at("Holds") == 1;
}

Money report_coop_balance(const ScenarioReport& report)
{
    return report.imbalance();
}

ScenarioReport run_scenario(const Scenario& scenario, const std::filesystem::path& work_dir)
{
    std::filesystem::create_directories(work_dir);
    auto clock = std::make_shared<ManualClock>(parse_timestamp(k_start_of_time));
    RandomSource random = seeded_random(scenario.seed);

    auto registry = std::make_shared<KeyRegistry>();
    Identity bank_identity = Identity::generate(std::string(k_bank_subject), random);
    Identity admin_identity = Identity::generate(std::string(k_admin_subject), random);
    registry->register_identity(bank_identity);
    registry->register_identity(admin_identity);

    std::map<std::string, Identity> identities;
    for (const auto& participant : scenario.participants) {
        Identity id = Identity::generate(participant.subject, random);
        registry->register_identity(id);
        identities.emplace(participant.subject, std::move(id));
    }

    BankConfig bank_config;
    bank_config.identity = bank_identity;
    bank_config.admins = {std::string(k_admin_subject)};
    bank_config.currency = scenario.currency;
    bank_config.journal_path = work_dir / "bank-journal.log";
    Bank bank(bank_config, clock, registry, seeded_random(scenario.seed ^ 0x9E3779B97F4A7C15ULL));

    BankServer bank_server(bank, "127.0.0.1", 0);
    bank.set_advertised_endpoint(bank_server.endpoint());
    bank_server.start();

    WireClient admin = WireClient::connect_endpoint(bank_server.endpoint(), admin_identity,
                                                    bank_identity.public_key);

    // Accounts and opening deposits, in participant order.
    std::map<std::string, AccountId> accounts;
    for (const auto& participant : scenario.participants) {
        Value params = Value::map();
        params.set("CertificateName", participant.subject);
        params.set("OrganizationName", participant.organization);
        params.set("Currency", scenario.currency);
        Value created = admin.call("CreateAccount", std::move(params));
        AccountId account = AccountId::parse(created.string_at("AccountID"));
        accounts.emplace(participant.subject, account);
        if (participant.deposit.positive()) {
            Value deposit = Value::map();
            deposit.set("AccountID", account.text());
            deposit.set("Amount", participant.deposit.text());
            admin.call("Deposit", std::move(deposit));
        }
    }

    // Providers: GTS + GBCM + GRM per node, each with its own port and
    // mapfile.
    std::map<std::string, std::string> participant_hosts;
    for (const auto& participant : scenario.participants)
        participant_hosts.emplace(participant.subject, participant.host_name);

    std::vector<std::unique_ptr<Provider>> providers;
    std::vector<std::unique_ptr<ProviderServer>> provider_servers;
    std::map<std::string, std::string> provider_endpoints; // subject -> host:port
    int provider_index = 0;
    for (const auto& spec : scenario.providers) {
        auto identity = identities.find(spec.subject);
        if (identity == identities.end())
            fail(Errc::ConfigError, "provider " + spec.subject + " is not a participant");
        ProviderConfig config;
        config.identity = identity->second;
        config.account_id = accounts.at(spec.subject);
        config.bank_subject = std::string(k_bank_subject);
        config.bank_endpoint = bank_server.endpoint();
        config.host_name = participant_hosts.at(spec.subject);
        config.host_type = spec.host_type;
        config.rates = spec.rates;
        config.currency = scenario.currency;
        config.rates_ttl_seconds = spec.rates_ttl_seconds;
        config.pool_accounts.clear();
        for (int i = 1; i <= spec.pool_size; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "grid%04d", i);
            config.pool_accounts.push_back(buf);
        }
        config.mapfile = work_dir / ("mapfile-" + std::to_string(++provider_index));
        config.description = spec.description;

        providers.push_back(std::make_unique<Provider>(std::move(config), clock, registry));
        provider_servers.push_back(
            std::make_unique<ProviderServer>(*providers.back(), "127.0.0.1", 0));
        provider_servers.back()->start();
        provider_endpoints.emplace(spec.subject, provider_servers.back()->endpoint());
    }

    // Consumer payment modules, budgets defaulting to the opening deposit.
    std::map<std::string, std::unique_ptr<PaymentModule>> consumers;
    for (const auto& job : scenario.jobs) {
        if (consumers.contains(job.consumer))
            continue;
        auto identity = identities.find(job.consumer);
        if (identity == identities.end())
            fail(Errc::ConfigError, "consumer " + job.consumer + " is not a participant");
        ConsumerConfig config;
        config.identity = identity->second;
        config.account_id = accounts.at(job.consumer);
        config.bank_subject = std::string(k_bank_subject);
        config.bank_endpoint = bank_server.endpoint();
        config.host_name = participant_hosts.at(job.consumer);
        config.default_link_value = scenario.link_value;
        config.instrument_ttl_seconds = scenario.instrument_ttl_seconds;
        auto pm = std::make_unique<PaymentModule>(std::move(config), clock, registry);

        Money budget = scenario.participants.front().deposit; // overwritten below
        for (const auto& participant : scenario.participants) {
            if (participant.subject == job.consumer)
                budget = participant.deposit;
        }
        if (auto it = scenario.budgets.find(job.consumer); it != scenario.budgets.end())
            budget = it->second;
        if (budget.positive())
            pm->set_budget(budget);
        consumers.emplace(job.consumer, std::move(pm));
    }

    // The job list runs in order; virtual time advances by each job's wall
    // duration so records carry increasing timestamps.
    Value job_reports = Value::list();
    std::vector<JobReport> reports;
    for (const auto& entry : scenario.jobs) {
        auto endpoint = provider_endpoints.find(entry.provider);
        JobSpec spec;
        spec.application_name = entry.application;
        spec.gsp_endpoint = endpoint != provider_endpoints.end() ? endpoint->second : "";
        spec.gsp_subject = entry.provider;
        spec.strategy = entry.strategy;
        spec.declared_usage = entry.usage;
        spec.budget_slice = entry.budget_slice;
        spec.user_host = participant_hosts.at(entry.consumer);
        if (spec.gsp_endpoint.empty()) {
            JobReport broken;
            broken.strategy = entry.strategy;
            broken.error = std::string(errc_code(Errc::ConfigError));
            reports.push_back(std::move(broken));
        } else {
            reports.push_back(consumers.at(entry.consumer)->submit_job(spec));
        }
        clock->advance((entry.usage.wall_seconds.micro + 999'999) / 1'000'000);
    }

    // Step 6: batch redemption while instruments are still live.
    for (auto& provider : providers)
        provider->redeem_batch();

    // Expiry: unspent cheque locks and chain tails return to their drawers.
    clock->advance(scenario.instrument_ttl_seconds + 3600);
    admin.call("SweepExpired", Value::map());
    for (auto& [subject, pm] : consumers)
        pm->expire_instruments();

    // Estimates run against the settlement history just built.
    Value estimate_results = Value::list();
    for (const auto& query : scenario.estimates) {
        Value params = Value::map();
        params.set("Description", query.description.to_value());
        params.set("K", query.k);
        Value response = admin.call_raw("EstimatePrice", std::move(params));
        if (const Value* error = response.find("Error")) {
            Value entry = Value::map();
            entry.set("Error", *error);
            estimate_results.push(std::move(entry));
        } else {
            estimate_results.push(response.at("Result"));
        }
    }

    // Report, recomputed from the ledger rather than accumulated in flight.
    Timestamp epoch = parse_timestamp(k_start_of_time) - 86'400;
    Timestamp horizon = clock->now() + 86'400;
    Money total_funds = Money::zero(scenario.currency);
    Money total_deposits = Money::zero(scenario.currency);
    Money imbalance = Money::zero(scenario.currency);

    Value account_rows = Value::list();
    for (const auto& participant : scenario.participants) {
        const AccountId& account = accounts.at(participant.subject);
        Value get = Value::map();
        get.set("AccountID", account.text());
        Value record = admin.call("GetAccount", std::move(get));
        Money available = Money::parse(record.string_at("AvailableBalance"), scenario.currency);
        Money locked = Money::parse(record.string_at("LockedBalance"), scenario.currency);
        total_funds += available + locked;

        Value stmt_params = Value::map();
        stmt_params.set("AccountID", account.text());
        stmt_params.set("StartDate", format_timestamp(epoch));
        stmt_params.set("EndDate", format_timestamp(horizon));
        Value stmt = admin.call("Statement", std::move(stmt_params));

        Money consumed = Money::zero(scenario.currency);
        Money provided = Money::zero(scenario.currency);
        for (const auto& txn : stmt.at("Transactions").as_list()) {
            Money amount = Money::parse(txn.string_at("Amount"), scenario.currency);
            const std::string& type = txn.string_at("Type");
            if (type == "Deposit")
                total_deposits += amount;
            else if (type == "Withdrawal")
                total_deposits += amount; // negative
            else if (amount.negative())
                consumed += -amount;
            else
                provided += amount;
        }
        Money gap = provided > consumed ? provided - consumed : consumed - provided;
        imbalance = std::max(imbalance, gap);

        Value row = Value::map();
        row.set("AccountID", account.text());
        row.set("CertificateName", participant.subject);
        row.set("Available", available.text());
        row.set("Locked", locked.text());
        row.set("Consumed", consumed.text());
        row.set("Provided", provided.text());
        account_rows.push(std::move(row));
    }

    // Per-job redemption check: the transfer carrying this job's usage
    // record must exist and its amount must equal the recomputed charge
    // (capped at the instrument).
    std::map<std::string, std::pair<Money, std::string>> transfers_by_digest;
    for (const auto& participant : scenario.participants) {
        Value stmt_params = Value::map();
        stmt_params.set("AccountID", accounts.at(participant.subject).text());
        stmt_params.set("StartDate", format_timestamp(epoch));
        stmt_params.set("EndDate", format_timestamp(horizon));
        Value stmt = admin.call("Statement", std::move(stmt_params));
        for (const auto& xfer : stmt.at("Transfers").as_list()) {
            Bytes raw = base64_decode(xfer.string_at("ResourceUsageRecord"));
            if (raw.empty())
                continue;
            std::string blob(raw.begin(), raw.end());
            transfers_by_digest.insert_or_assign(
                hex_encode(sha256(blob)),
                std::make_pair(Money::parse(xfer.string_at("Amount"), scenario.currency), blob));
        }
    }

    for (auto& job : reports) {
        Value row = job.to_value();
        if (job.settled && !job.rur_blob.empty()) {
            auto match = transfers_by_digest.find(hex_encode(sha256(job.rur_blob)));
            bool redeemed = match != transfers_by_digest.end();
            row.set("RedeemedAtBank", redeemed ? 1 : 0);
            if (redeemed) {
                // recompute the charge from the stored blob alone
                ResourceUsageRecord rur = ResourceUsageRecord::decode(match->second.second);
                ChargeableRates rates;
                rates.currency = rur.currency;
                rates.gsp_subject = rur.resource_certificate_name;
                rates.valid_until = horizon;
                for (const auto& [item, usage] : rur.items)
                    rates.rates.emplace(item, usage.rate);
                Money recomputed = compute_charge(rur, rates).total;
                bool matches = match->second.first == std::min(recomputed, job.claim) ||
                               match->second.first == job.claim;
                row.set("ChargeMatchesTransfer", matches ? 1 : 0);
            }
        }
        job_reports.push(std::move(row));
    }

    bool conservation = total_funds == total_deposits;
    Value conservation_value = Value::map();
    conservation_value.set("Deposits", total_deposits.text());
    conservation_value.set("TotalFunds", total_funds.text());
    conservation_value.set("Currency", scenario.currency);
    conservation_value.set("Holds", conservation ? 1 : 0);

    Value report = Value::map();
    report.set("Scenario", scenario.name);
    report.set("Seed", static_cast<std::int64_t>(scenario.seed));
    report.set("Accounts", std::move(account_rows));
    report.set("Conservation", std::move(conservation_value));
    report.set("Imbalance", imbalance.text());
    report.set("Jobs", std::move(job_reports));
    report.set("Estimates", std::move(estimate_results));

    for (auto& server : provider_servers)
        server->stop();
    bank_server.stop();

    return ScenarioReport{std::move(report)};
}

} // namespace gridbank
