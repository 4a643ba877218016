#include "gridbank/errors.hpp"
#include "gridbank/gsc.hpp"
#include "gridbank/gsp.hpp"
#include "gridbank/server.hpp"

#include <doctest.h>

#include <filesystem>

using namespace gridbank;

namespace {

// Bank + one provider + one consumer, wired over live sockets.
struct GridFixture {
    std::filesystem::path dir;
    std::shared_ptr<ManualClock> clock =
        std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    std::shared_ptr<KeyRegistry> registry = std::make_shared<KeyRegistry>();
    Identity bank_identity = Identity::generate("CN=GridBank", seeded_random(1));
    Identity admin_identity = Identity::generate("CN=Admin", seeded_random(2));
    Identity gsp_identity = Identity::generate("CN=GSP,O=PRC", seeded_random(3));
    Identity gsc_identity = Identity::generate("CN=GSC,O=UWA", seeded_random(4));

    std::unique_ptr<Bank> bank;
    std::unique_ptr<BankServer> bank_server;
    std::unique_ptr<Provider> provider;
    std::unique_ptr<ProviderServer> provider_server;
    std::unique_ptr<PaymentModule> pm;
    AccountId gsp_account;
    AccountId gsc_account;

    GridFixture()
    {
        dir = std::filesystem::temp_directory_path() /
              ("gb-gsc-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);

        for (const Identity* id : {&bank_identity, &admin_identity, &gsp_identity, &gsc_identity})
            registry->register_identity(*id);

        BankConfig config;
        config.identity = bank_identity;
        config.admins = {"CN=Admin"};
        bank = std::make_unique<Bank>(config, clock, registry, seeded_random(5));
        bank_server = std::make_unique<BankServer>(*bank, "127.0.0.1", 0);
        bank->set_advertised_endpoint(bank_server->endpoint());
        bank_server->start();

        gsp_account = bank->ledger().create_account("CN=GSP,O=PRC", "PRC", "G$");
        gsc_account = bank->ledger().create_account("CN=GSC,O=UWA", "UWA", "G$");
        bank->ledger().deposit(gsc_account, Money::parse("100.000"), Access::Admin);

        ProviderConfig pcfg;
        pcfg.identity = gsp_identity;
        pcfg.account_id = gsp_account;
        pcfg.bank_subject = "CN=GridBank";
        pcfg.bank_endpoint = bank_server->endpoint();
        pcfg.rates = {
            {ChargeItem::WallClockTime, Quantity::parse("0")},
            {ChargeItem::CpuTime, Quantity::parse("3.6")},
            {ChargeItem::MainMemory, Quantity::parse("0.002")},
            {ChargeItem::SecondaryStorage, Quantity::parse("0")},
            {ChargeItem::NetworkActivity, Quantity::parse("0.01")},
            {ChargeItem::SoftwareService, Quantity::parse("0")},
        };
        pcfg.mapfile = dir / "grid-mapfile";
        provider = std::make_unique<Provider>(std::move(pcfg), clock, registry);
        provider_server = std::make_unique<ProviderServer>(*provider, "127.0.0.1", 0);
        provider_server->start();

        ConsumerConfig ccfg;
        ccfg.identity = gsc_identity;
        ccfg.account_id = gsc_account;
        ccfg.bank_subject = "CN=GridBank";
        ccfg.bank_endpoint = bank_server->endpoint();
        pm = std::make_unique<PaymentModule>(ccfg, clock, registry);
        pm->set_budget(Money::parse("100.000"));
    }

    ~GridFixture()
    {
        provider_server->stop();
        bank_server->stop();
        std::filesystem::remove_all(dir);
    }

    JobSpec worked_job(PaymentStrategy strategy, const char* slice = "60.000")
    {
        JobSpec job;
        job.application_name = "render";
        job.gsp_endpoint = provider_server->endpoint();
        job.gsp_subject = "CN=GSP,O=PRC";
        job.strategy = strategy;
        job.declared_usage.wall_seconds = Quantity::parse("7200");
        job.declared_usage.user_cpu_seconds = Quantity::parse("7200");
        job.declared_usage.memory_mb_hours = Quantity::parse("512");
        job.declared_usage.network_mb_total = Quantity::parse("100");
        job.budget_slice = Money::parse(slice);
        job.user_host = "alice.host";
        return job;
    }
};

} // namespace

TEST_SUITE_BEGIN("gsc");

TEST_CASE("budget setting and the BelowCommitted guard")
{
    GridFixture fx;
    CHECK(fx.pm->budget().total.text() == "100.000");

    fx.pm->request_instrument(PaymentStrategy::PayAfterUse, "CN=GSP,O=PRC",
                              Money::parse("60.000"));
    CHECK(fx.pm->budget().committed.text() == "60.000");

    try {
        fx.pm->set_budget(Money::parse("50.000"));
        FAIL("expected BelowCommitted");
    } catch (const GridBankError& e) {
        CHECK(e.code() == Errc::BelowCommitted);
    }
    // boundary: equal to committed + spent is allowed
    fx.pm->set_budget(Money::parse("60.000"));
    CHECK(fx.pm->budget().total.text() == "60.000");
}

TEST_CASE("instrument requests respect the budget and the bank lock")
{
    GridFixture fx;
    fx.pm->request_instrument(PaymentStrategy::PayAfterUse, "CN=GSP,O=PRC",
                              Money::parse("60.000"));
    CHECK(fx.bank->ledger().get_account(fx.gsc_account).locked_balance.text() == "60.000");
    CHECK(fx.pm->budget().committed.text() == "60.000");

    try {
        fx.pm->request_instrument(PaymentStrategy::PayAfterUse, "CN=GSP,O=PRC",
                                  Money::parse("50.000"));
        FAIL("expected BudgetExceeded");
    } catch (const GridBankError& e) {
        CHECK(e.code() == Errc::BudgetExceeded);
    }
}

TEST_CASE("pay-as-you-go link division: 5.000 at 0.500 gives a 10-link chain")
{
    GridFixture fx;
    std::string id = fx.pm->request_instrument(PaymentStrategy::PayAsYouGo, "CN=GSP,O=PRC",
                                               Money::parse("5.000"));
    CHECK(id.substr(0, 3) == "CHN");
    CHECK(fx.bank->ledger().get_account(fx.gsc_account).locked_balance.text() == "5.000");
    CHECK(fx.pm->budget().committed.text() == "5.000");
    // consumer committed equals the bank's locked balance
    CHECK(fx.pm->budget().committed ==
          fx.bank->ledger().get_account(fx.gsc_account).locked_balance);
}

TEST_CASE("pay-after-use end to end: charge 9.224 under a 60 cheque")
{
    GridFixture fx;
    JobReport report = fx.pm->submit_job(fx.worked_job(PaymentStrategy::PayAfterUse));
    CHECK(report.error.empty());
    CHECK(report.negotiated);
    CHECK(report.instrument_obtained);
    CHECK(report.access_authorized);
    CHECK(report.job_submitted);
    CHECK(report.settled);
    CHECK(report.claim.text() == "9.224");
    CHECK(report.shortfall.is_zero());

    // budget: committed released, claim became spend
    Budget budget = fx.pm->budget();
    CHECK(budget.committed.is_zero());
    CHECK(budget.spent.text() == "9.224");

    // provider redeems the batch; money lands, lock cleared
    fx.provider->redeem_batch();
    CHECK(fx.bank->ledger().get_account(fx.gsp_account).available_balance.text() == "9.224");
    Account gsc = fx.bank->ledger().get_account(fx.gsc_account);
    CHECK(gsc.available_balance.text() == "90.776");
    CHECK(gsc.locked_balance.is_zero());

    // bank transfer carries the same usage record the consumer received
    auto transfers = fx.bank->ledger().transfers();
    REQUIRE_FALSE(transfers.empty());
    CHECK(transfers.back().resource_usage_record == report.rur_blob);
}

TEST_CASE("pay-as-you-go end to end: paywords stream and the tail expires")
{
    GridFixture fx;
    // charge: cpu only = 2h x 3.6 = 7.2; chain 8.000 at 0.5 links => 16 links
    JobSpec job = fx.worked_job(PaymentStrategy::PayAsYouGo, "8.000");
    job.declared_usage.memory_mb_hours = Quantity::parse("0");
    job.declared_usage.network_mb_total = Quantity::parse("0");

    JobReport report = fx.pm->submit_job(job);
    CHECK(report.error.empty());
    // 7.2 / 0.5 = 14.4 -> 15 paywords, worth 7.500
    CHECK(report.claim.text() == "7.500");

    fx.provider->redeem_batch();
    CHECK(fx.bank->ledger().get_account(fx.gsp_account).available_balance.text() == "7.500");
    // bank still holds the chain tail: 16 x 0.5 - 7.5 = 0.500
    CHECK(fx.bank->ledger().get_account(fx.gsc_account).locked_balance.text() == "0.500");
    CHECK(fx.pm->budget().committed.text() == "0.500");
    CHECK(fx.pm->budget().spent.text() == "7.500");

    // expiry returns the tail to the drawer and releases the headroom
    fx.clock->advance(4000);
    fx.bank->sweep_expired();
    fx.pm->expire_instruments();
    CHECK(fx.bank->ledger().get_account(fx.gsc_account).locked_balance.is_zero());
    CHECK(fx.pm->budget().committed.is_zero());
    CHECK(fx.pm->budget().committed ==
          fx.bank->ledger().get_account(fx.gsc_account).locked_balance);
}

TEST_CASE("pay-before-use: direct transfer with confirmation, then submission")
{
    GridFixture fx;
    JobSpec job = fx.worked_job(PaymentStrategy::PayBeforeUse, "2.000");
    // fixed-price directory-style service: trivial usage
    job.declared_usage = DeclaredUsage{};
    JobReport report = fx.pm->submit_job(job);
    CHECK(report.error.empty());
    CHECK(report.settled);

    // funds moved up front regardless of metered charge
    CHECK(fx.bank->ledger().get_account(fx.gsp_account).available_balance.text() == "2.000");
    CHECK(fx.pm->budget().spent.text() == "2.000");
    CHECK(fx.pm->budget().committed.is_zero());
    CHECK(fx.provider->redemption_queue_size() == 0);
}

TEST_CASE("pool exhaustion consumes no payment; the cheque releases at expiry")
{
    GridFixture fx;
    // fill the pool with four foreign allocations
    SignedEnvelope rates = fx.provider->negotiate_rates();
    for (int i = 0; i < 4; ++i) {
        SignedEnvelope cheque = fx.bank->instruments().issue_cheque(
            fx.gsc_account, "CN=GSP,O=PRC", Money::parse("1.000"), 1'000'000);
        Value v = Value::map();
        v.set("Kind", "Cheque");
        v.set("Cheque", cheque.to_value());
        fx.provider->authorize_access("CN=GSC,O=UWA", v, rates);
    }

    JobReport report = fx.pm->submit_job(fx.worked_job(PaymentStrategy::PayAfterUse));
    CHECK(report.error == "POOL_EXHAUSTED");
    CHECK_FALSE(report.settled);
    // instrument still committed, no spend
    CHECK(fx.pm->budget().committed.text() == "60.000");
    CHECK(fx.pm->budget().spent.is_zero());

    // after expiry everything returns
    fx.clock->advance(7200);
    fx.bank->sweep_expired();
    fx.pm->expire_instruments();
    CHECK(fx.pm->budget().committed.is_zero());
    Account gsc = fx.bank->ledger().get_account(fx.gsc_account);
    CHECK(gsc.available_balance.text() == "96.000"); // four 1.000 locks still held
    CHECK(gsc.locked_balance.text() == "4.000");
}

TEST_CASE("account passthrough mirrors the bank API")
{
    GridFixture fx;
    Value balance = fx.pm->account_passthrough("GetAccount", Value::map());
    CHECK(balance.at("Result").string_at("AvailableBalance") == "100.000");

    Value params = Value::map();
    params.set("StartDate", "2002-08-23T00:00:00Z");
    params.set("EndDate", "2002-08-24T00:00:00Z");
    Value stmt = fx.pm->account_passthrough("Statement", std::move(params));
    CHECK(stmt.at("Result").at("Transactions").as_list().size() == 1); // the deposit

    Value unknown = fx.pm->account_passthrough("GetAccount", Value::map());
    CHECK(unknown.find("Error") == nullptr);

    try {
        fx.pm->account_passthrough("Deposit", Value::map());
        FAIL("expected UnknownOp");
    } catch (const GridBankError& e) {
        CHECK(e.code() == Errc::UnknownOp);
    }
}

TEST_SUITE_END();
