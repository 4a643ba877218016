#include "gridbank/errors.hpp"
#include "gridbank/harness.hpp"

#include <doctest.h>

#include <filesystem>

using namespace gridbank;

namespace {

std::filesystem::path scenario_dir()
{
    return std::filesystem::path(GRIDBANK_SCENARIO_DIR);
}

std::filesystem::path fresh_dir(const std::string& tag)
{
    auto dir = std::filesystem::temp_directory_path() / ("gb-harness-" + tag);
    std::filesystem::remove_all(dir);
    return dir;
}

const Value& single_job(const ScenarioReport& report)
{
    return report.jobs().as_list().at(0);
}

} // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("fig1 single job: six steps, exact debit, usage record at the bank")
{
    Scenario scenario = Scenario::load(scenario_dir() / "fig1_single_job.scn");
    ScenarioReport report = run_scenario(scenario, fresh_dir("fig1"));

    const Value& job = single_job(report);
    CHECK(job.string_at("Error").empty());
    const Value& steps = job.at("Steps");
    for (const char* step : {"Negotiated", "InstrumentObtained", "AccessAuthorized",
                             "JobSubmitted", "Settled", "RedeemQueued"})
        CHECK(steps.int_at(step) == 1);
    CHECK(job.int_at("RedeemedAtBank") == 1);
    CHECK(job.int_at("ChargeMatchesTransfer") == 1);
    CHECK(job.string_at("Claim") == "9.224");

    // consumer debited exactly the computed charge
    const Value::List& accounts = report.report.at("Accounts").as_list();
    CHECK(accounts.at(0).string_at("Available") == "90.776");
    CHECK(accounts.at(0).string_at("Consumed") == "9.224");
    CHECK(accounts.at(1).string_at("Available") == "9.224");
    CHECK(accounts.at(1).string_at("Provided") == "9.224");
    CHECK(report.conservation_holds());
}

TEST_CASE("fig1 is deterministic: identical scenario and seed give identical bytes")
{
    Scenario scenario = Scenario::load(scenario_dir() / "fig1_single_job.scn");
    ScenarioReport first = run_scenario(scenario, fresh_dir("det1"));
    ScenarioReport second = run_scenario(scenario, fresh_dir("det2"));
    CHECK(first.canonical_text() == second.canonical_text());
}

TEST_CASE("empty job list: conservation trivially holds")
{
    Scenario scenario = Scenario::load(scenario_dir() / "fig1_single_job.scn");
    scenario.jobs.clear();
    ScenarioReport report = run_scenario(scenario, fresh_dir("empty"));
    CHECK(report.conservation_holds());
    CHECK(report.jobs().as_list().empty());
    CHECK(report.imbalance().is_zero());
    const Value::List& accounts = report.report.at("Accounts").as_list();
    CHECK(accounts.at(0).string_at("Available") == "100.000");
}

TEST_CASE("fig4 co-op: heterogeneous rates with adjusted durations balance out")
{
    Scenario scenario = Scenario::load(scenario_dir() / "fig4_coop4.scn");
    ScenarioReport report = run_scenario(scenario, fresh_dir("fig4"));

    for (const auto& job : report.jobs().as_list()) {
        CHECK(job.string_at("Error").empty());
        // every credit is backed by a usage-record transfer of the same value
        CHECK(job.int_at("RedeemedAtBank") == 1);
        CHECK(job.int_at("ChargeMatchesTransfer") == 1);
    }
    CHECK(report.conservation_holds());
    CHECK(report_coop_balance(report).is_zero());

    // every node both provided and consumed 12 G$
    for (const auto& account : report.report.at("Accounts").as_list()) {
        CHECK(account.string_at("Consumed") == "12.000");
        CHECK(account.string_at("Provided") == "12.000");
        CHECK(account.string_at("Available") == "50.000");
        CHECK(account.string_at("Locked") == "0.000");
    }
}

TEST_CASE("a pure consumer's imbalance equals its total spend")
{
    Scenario scenario = Scenario::load(scenario_dir() / "fig1_single_job.scn");
    ScenarioReport report = run_scenario(scenario, fresh_dir("pure"));
    CHECK(report.imbalance().text() == "9.224");
}

TEST_CASE("mixed strategies: paywords and prepaid transfer through the full stack")
{
    Scenario scenario;
    scenario.name = "mixed";
    scenario.seed = 17;
    scenario.instrument_ttl_seconds = 86'400;
    scenario.participants = {
        {"CN=Consumer,O=Mix", "Mix", Money::parse("50.000"), "c.mix"},
        {"CN=Meter,O=Mix", "Mix", Money::parse("0.000"), "meter.mix"},
        {"CN=Shop,O=Mix", "Mix", Money::parse("0.000"), "shop.mix"},
    };
    auto cpu_only = [](const char* rate) {
        return std::map<ChargeItem, Quantity>{
            {ChargeItem::WallClockTime, Quantity::parse("0")},
            {ChargeItem::CpuTime, Quantity::parse(rate)},
            {ChargeItem::MainMemory, Quantity::parse("0")},
            {ChargeItem::SecondaryStorage, Quantity::parse("0")},
            {ChargeItem::NetworkActivity, Quantity::parse("0")},
            {ChargeItem::SoftwareService, Quantity::parse("0")},
        };
    };
    scenario.providers = {
        {"CN=Meter,O=Mix", cpu_only("3.6"), 3600, 4, "Cluster", std::nullopt},
        {"CN=Shop,O=Mix", cpu_only("2.0"), 3600, 4, "Directory", std::nullopt},
    };
    DeclaredUsage two_hours;
    two_hours.wall_seconds = Quantity::parse("7200");
    two_hours.user_cpu_seconds = Quantity::parse("7200");
    DeclaredUsage one_hour;
    one_hour.wall_seconds = Quantity::parse("3600");
    one_hour.user_cpu_seconds = Quantity::parse("3600");
    scenario.jobs = {
        // 2 CPU-h at 3.6 = 7.200; chain of 16 x 0.500 covers it with 15 words
        {"CN=Consumer,O=Mix", "CN=Meter,O=Mix", "crunch", PaymentStrategy::PayAsYouGo,
         two_hours, Money::parse("8.000")},
        // fixed-price prepaid service: 1 CPU-h at 2.0 equals the 2.000 slice
        {"CN=Consumer,O=Mix", "CN=Shop,O=Mix", "lookup", PaymentStrategy::PayBeforeUse,
         one_hour, Money::parse("2.000")},
    };

    ScenarioReport report = run_scenario(scenario, fresh_dir("mixed"));
    CHECK(report.conservation_holds());
    const Value::List& jobs = report.jobs().as_list();
    REQUIRE(jobs.size() == 2);
    CHECK(jobs.at(0).string_at("Error").empty());
    CHECK(jobs.at(0).string_at("Claim") == "7.500"); // 15 paywords streamed
    CHECK(jobs.at(1).string_at("Error").empty());

    const Value::List& accounts = report.report.at("Accounts").as_list();
    // consumer: 50 - 7.5 - 2.0, chain tail returned by the sweep
    CHECK(accounts.at(0).string_at("Available") == "40.500");
    CHECK(accounts.at(0).string_at("Locked") == "0.000");
    CHECK(accounts.at(1).string_at("Provided") == "7.500");
    CHECK(accounts.at(2).string_at("Provided") == "2.000");
    CHECK(report.imbalance().text() == "9.500"); // the pure consumer's spend
}

TEST_CASE("competitive estimates come back from settlement history")
{
    Scenario scenario = Scenario::load(scenario_dir() / "competitive_estimate.scn");
    ScenarioReport report = run_scenario(scenario, fresh_dir("estimate"));
    CHECK(report.conservation_holds());

    const Value::List& estimates = report.report.at("Estimates").as_list();
    REQUIRE(estimates.size() == 3);
    CHECK(estimates.at(0).string_at("EstimatedRate") == "3.000000"); // midway, k=4
    CHECK(estimates.at(1).string_at("EstimatedRate") == "2.000000"); // slow cluster
    CHECK(estimates.at(2).string_at("EstimatedRate") == "4.000000"); // fast cluster
}

TEST_SUITE_END();
