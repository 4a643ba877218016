#include "gridbank/bank.hpp"
#include "gridbank/instruments.hpp"
#include "gridbank/rur.hpp"

#include <benchmark/benchmark.h>

using namespace gridbank;

namespace {

Value sample_tree()
{
    Value inner = Value::map();
    inner.set("AccountID", "01-0001-00000001");
    inner.set("Amount", "123.456");
    inner.set("Date", "2002-08-23T10:00:00Z");
    Value list = Value::list();
    for (int i = 0; i < 8; ++i)
        list.push(inner);
    Value v = Value::map();
    v.set("Records", std::move(list));
    v.set("RequestID", 42);
    return v;
}

void bm_canonical_encode(benchmark::State& state)
{
    Value v = sample_tree();
    for (auto _ : state)
        benchmark::DoNotOptimize(v.encode());
}
BENCHMARK(bm_canonical_encode);

void bm_canonical_parse(benchmark::State& state)
{
    std::string text = sample_tree().encode();
    for (auto _ : state)
        benchmark::DoNotOptimize(Value::parse(text));
}
BENCHMARK(bm_canonical_parse);

void bm_payword_verify(benchmark::State& state)
{
    Hash256 secret{};
    secret.fill(7);
    std::uint32_t n = static_cast<std::uint32_t>(state.range(0));
    Hash256 w = secret;
    for (std::uint32_t i = 0; i < n; ++i)
        w = sha256(w);
    for (auto _ : state)
        benchmark::DoNotOptimize(payword_matches_root(w, n, secret));
}
BENCHMARK(bm_payword_verify)->Arg(10)->Arg(64)->Arg(1024);

void bm_ledger_transfer(benchmark::State& state)
{
    auto clock = std::make_shared<ManualClock>(1030096800);
    Ledger ledger(clock, std::make_shared<NullJournal>());
    AccountId a = ledger.create_account("CN=A", "", "G$");
    AccountId b = ledger.create_account("CN=B", "", "G$");
    ledger.deposit(a, Money::from_milli(1'000'000'000), Access::Admin);
    Money amount = Money::from_milli(1);
    bool forward = true;
    for (auto _ : state) {
        ledger.transfer(forward ? a : b, forward ? b : a, amount, {});
        forward = !forward;
    }
}
BENCHMARK(bm_ledger_transfer);

void bm_compute_charge(benchmark::State& state)
{
    ChargeableRates rates;
    rates.rates = {
        {ChargeItem::WallClockTime, Quantity::parse("0.1")},
        {ChargeItem::CpuTime, Quantity::parse("3.6")},
        {ChargeItem::MainMemory, Quantity::parse("0.002")},
        {ChargeItem::SecondaryStorage, Quantity::parse("0.001")},
        {ChargeItem::NetworkActivity, Quantity::parse("0.01")},
        {ChargeItem::SoftwareService, Quantity::parse("0.5")},
    };
    rates.gsp_subject = "CN=GSP";
    rates.valid_until = 2000000000;

    RawUsage raw;
    raw.local_job_id = "grid0001:1";
    raw.wall_start = 1030096800;
    raw.wall_end = raw.wall_start + 7200;
    raw.user_cpu_seconds = Quantity::parse("7200");
    raw.sys_cpu_seconds = Quantity::parse("120");
    raw.memory_mb_hours = Quantity::parse("512");
    raw.storage_mb_hours = Quantity::parse("64");
    raw.network_mb_total = Quantity::parse("100");
    ResourceUsageRecord rur =
        convert_raw_usage(raw, {"h", "CN=U"}, {"J", "app"}, {"r", "CN=GSP", ""}, rates);
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_charge(rur, rates));
}
BENCHMARK(bm_compute_charge);

void bm_sign_envelope(benchmark::State& state)
{
    Identity identity = Identity::generate("CN=Bench", seeded_random(1));
    std::string payload = sample_tree().encode();
    for (auto _ : state)
        benchmark::DoNotOptimize(sign_payload(identity, payload));
}
BENCHMARK(bm_sign_envelope);

} // namespace

BENCHMARK_MAIN();
