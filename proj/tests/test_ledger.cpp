#include "gridbank/crypto.hpp"
#include "gridbank/errors.hpp"
#include "gridbank/journal.hpp"
#include "gridbank/ledger.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

using namespace gridbank;

namespace {

struct LedgerFixture {
    std::shared_ptr<ManualClock> clock =
        std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    std::shared_ptr<Journal> journal = std::make_shared<NullJournal>();
    Ledger ledger{clock, journal};

    AccountId open(const std::string& subject, std::int64_t deposit_milli = 0)
    {
        AccountId id = ledger.create_account(subject, "", "G$");
        if (deposit_milli > 0)
            ledger.deposit(id, Money::from_milli(deposit_milli), Access::Admin);
        return id;
    }
};

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const GridBankError& e) {
        return e.code();
    }
    throw std::runtime_error("expected a GridBankError");
}

} // namespace

TEST_SUITE_BEGIN("ledger");

TEST_CASE("account ids follow the bank-branch-sequence pattern")
{
    LedgerFixture fx;
    CHECK(fx.open("CN=Alice,O=UWA").text() == "01-0001-00000001");
    CHECK(fx.open("CN=Bob,O=UWA").text() == "01-0001-00000002");
    CHECK(code_of([&] { fx.open("CN=Alice,O=UWA"); }) == Errc::DuplicateSubject);

    AccountId parsed = AccountId::parse("01-0001-00000001");
    CHECK(parsed.text() == "01-0001-00000001");
    CHECK_THROWS_AS(AccountId::parse("01-001-000000001"), GridBankError);
    CHECK_THROWS_AS(AccountId::parse("xx-0001-00000001"), GridBankError);
}

TEST_CASE("fresh accounts start at zero with zero credit limit")
{
    LedgerFixture fx;
    Account account = fx.ledger.get_account(fx.open("CN=Alice,O=UWA"));
    CHECK(account.available_balance.milli == 0);
    CHECK(account.locked_balance.milli == 0);
    CHECK(account.credit_limit.milli == 0);
    CHECK(account.certificate_name == "CN=Alice,O=UWA");

    CHECK(code_of([&] { fx.ledger.get_account(AccountId::parse("01-0001-00000099")); }) ==
          Errc::NoSuchAccount);
}

TEST_CASE("deposit and withdraw against the accumulator oracle")
{
    LedgerFixture fx;
    oracle::BalanceOracle oracle;
    AccountId a = fx.open("CN=A");

    fx.ledger.deposit(a, Money::parse("100.000"), Access::Admin);
    oracle.deposit("a", 100'000);
    CHECK(fx.ledger.get_account(a).available_balance.milli == oracle.available["a"]);

    fx.ledger.withdraw(a, Money::parse("40.000"), Access::Admin);
    oracle.withdraw("a", 40'000);
    CHECK(fx.ledger.get_account(a).available_balance.milli == 60'000);
    CHECK(fx.ledger.get_account(a).available_balance.milli == oracle.available["a"]);

    // the withdrawal row is negative
    auto stmt = fx.ledger.statement(a, 0, fx.clock->now() + 10);
    REQUIRE(stmt.transactions.size() == 2);
    CHECK(stmt.transactions[1].txn_type == TxnType::Withdrawal);
    CHECK(stmt.transactions[1].amount.milli == -40'000);

    CHECK(code_of([&] { fx.ledger.deposit(a, Money::parse("0.000"), Access::Admin); }) ==
          Errc::NonPositiveAmount);
    CHECK(code_of([&] { fx.ledger.deposit(a, Money::parse("1.000"), Access::User); }) ==
          Errc::NotAdmin);
    CHECK(code_of([&] { fx.ledger.withdraw(a, Money::parse("100.000"), Access::Admin); }) ==
          Errc::InsufficientFunds);
}

TEST_CASE("credit limit boundary: withdraw to exactly -limit")
{
    LedgerFixture fx;
    AccountId a = fx.open("CN=A");
    CHECK(code_of([&] { fx.ledger.withdraw(a, Money::parse("1.000"), Access::Admin); }) ==
          Errc::InsufficientFunds);

    fx.ledger.set_credit_limit(a, Money::parse("5.000"), Access::Admin);
    fx.ledger.withdraw(a, Money::parse("5.000"), Access::Admin);
    CHECK(fx.ledger.get_account(a).available_balance.milli == -5'000);

    // lowering the limit below the overdraft is rejected
    CHECK(code_of([&] { fx.ledger.set_credit_limit(a, Money::parse("2.000"), Access::Admin); }) ==
          Errc::WouldViolateBalance);
}

TEST_CASE("update_account changes identity fields only")
{
    LedgerFixture fx;
    AccountId a = fx.open("CN=Alice,O=UWA", 10'000);
    AccountId b = fx.open("CN=Bob,O=UWA");

    Account submitted = fx.ledger.get_account(a);
    submitted.organization_name = "UniMelb";
    submitted.available_balance = Money::parse("999.000"); // must be ignored
    fx.ledger.update_account(submitted);

    Account after = fx.ledger.get_account(a);
    CHECK(after.organization_name == "UniMelb");
    CHECK(after.available_balance.milli == 10'000);

    submitted.certificate_name = "CN=Bob,O=UWA";
    CHECK(code_of([&] { fx.ledger.update_account(submitted); }) == Errc::DuplicateSubject);
    (void)b;
}

TEST_CASE("transfer moves funds atomically and keeps signs per the audit rule")
{
    LedgerFixture fx;
    oracle::BalanceOracle oracle;
    AccountId a = fx.open("CN=A", 100'000);
    AccountId b = fx.open("CN=B");
    oracle.deposit("a", 100'000);

    std::uint64_t txn = fx.ledger.transfer(a, b, Money::parse("30.000"), "rur-bytes");
    oracle.transfer("a", "b", 30'000);
    CHECK(fx.ledger.get_account(a).available_balance.milli == oracle.available["a"]);
    CHECK(fx.ledger.get_account(b).available_balance.milli == oracle.available["b"]);

    auto record = fx.ledger.find_transfer(txn);
    REQUIRE(record.has_value());
    CHECK(record->amount.milli == 30'000);
    CHECK(record->resource_usage_record == "rur-bytes");

    // one transaction id, two rows, signs (-,+)
    auto stmt_a = fx.ledger.statement(a, 0, fx.clock->now() + 10);
    auto stmt_b = fx.ledger.statement(b, 0, fx.clock->now() + 10);
    CHECK(stmt_a.transactions.back().amount.milli == -30'000);
    CHECK(stmt_b.transactions.back().amount.milli == 30'000);
    CHECK(stmt_a.transactions.back().transaction_id == txn);
    CHECK(stmt_b.transactions.back().transaction_id == txn);
    REQUIRE(stmt_a.transfers.size() == 1);
    CHECK(stmt_a.transfers[0].transaction_id == txn);

    CHECK(code_of([&] { fx.ledger.transfer(a, b, Money::parse("0.000"), {}); }) ==
          Errc::NonPositiveAmount);
    CHECK(code_of([&] { fx.ledger.transfer(a, a, Money::parse("1.000"), {}); }) ==
          Errc::SelfTransfer);
}

TEST_CASE("locks: create, partial redemption, release, retirement")
{
    LedgerFixture fx;
    AccountId a = fx.open("CN=A", 100'000);
    AccountId payee = fx.open("CN=P");

    std::uint64_t lock = fx.ledger.lock_funds(a, Money::parse("60.000"), "CHQ-1");
    CHECK(fx.ledger.get_account(a).available_balance.milli == 40'000);
    CHECK(fx.ledger.get_account(a).locked_balance.milli == 60'000);

    SUBCASE("redeem part, remainder keeps the lock alive")
    {
        fx.ledger.transfer_from_locked(lock, payee, Money::parse("45.000"), {});
        CHECK(fx.ledger.get_account(payee).available_balance.milli == 45'000);
        CHECK(fx.ledger.get_account(a).locked_balance.milli == 15'000);
        CHECK(fx.ledger.find_lock(lock)->remaining.milli == 15'000);

        fx.ledger.release_lock(lock);
        CHECK(fx.ledger.get_account(a).available_balance.milli == 55'000);
        CHECK(fx.ledger.get_account(a).locked_balance.milli == 0);
        CHECK(code_of([&] { fx.ledger.release_lock(lock); }) == Errc::NoSuchLock);
    }

    SUBCASE("redeeming beyond the lock is rejected")
    {
        CHECK(code_of([&] {
                  fx.ledger.transfer_from_locked(lock, payee, Money::parse("61.000"), {});
              }) == Errc::ExceedsLock);
    }

    SUBCASE("exact redemption retires the lock")
    {
        fx.ledger.transfer_from_locked(lock, payee, Money::parse("60.000"), {});
        CHECK(fx.ledger.get_account(a).locked_balance.milli == 0);
        CHECK_FALSE(fx.ledger.find_lock(lock).has_value());
    }

    SUBCASE("two locks sum into locked_balance")
    {
        fx.ledger.release_lock(lock);
        std::uint64_t l1 = fx.ledger.lock_funds(a, Money::parse("30.000"), "x");
        std::uint64_t l2 = fx.ledger.lock_funds(a, Money::parse("30.000"), "y");
        CHECK(fx.ledger.get_account(a).locked_balance.milli == 60'000);
        CHECK(fx.ledger.find_lock(l1)->remaining.milli +
                  fx.ledger.find_lock(l2)->remaining.milli ==
              60'000);
    }

    SUBCASE("insufficient available funds refuse a lock")
    {
        CHECK(code_of([&] { fx.ledger.lock_funds(a, Money::parse("41.000"), "z"); }) ==
              Errc::InsufficientFunds);
    }
}

TEST_CASE("cancel_transfer posts a compensating entry")
{
    LedgerFixture fx;
    AccountId a = fx.open("CN=A", 100'000);
    AccountId b = fx.open("CN=B");
    std::uint64_t txn = fx.ledger.transfer(a, b, Money::parse("30.000"), {});

    fx.ledger.cancel_transfer(txn, Access::Admin);
    CHECK(fx.ledger.get_account(a).available_balance.milli == 100'000);
    CHECK(fx.ledger.get_account(b).available_balance.milli == 0);
    CHECK(fx.ledger.find_transfer(txn)->cancelled);

    CHECK(code_of([&] { fx.ledger.cancel_transfer(txn, Access::Admin); }) ==
          Errc::AlreadyCancelled);
    CHECK(code_of([&] { fx.ledger.cancel_transfer(9999, Access::Admin); }) ==
          Errc::NoSuchTransfer);

    // recipient spent the money, reversal impossible at credit 0
    std::uint64_t txn2 = fx.ledger.transfer(a, b, Money::parse("30.000"), {});
    fx.ledger.transfer(b, a, Money::parse("25.000"), {});
    CHECK(code_of([&] { fx.ledger.cancel_transfer(txn2, Access::Admin); }) ==
          Errc::InsufficientFunds);
}

TEST_CASE("close_account sweeps the residual and seals the account")
{
    LedgerFixture fx;
    AccountId a = fx.open("CN=A", 25'000);
    AccountId dest = fx.open("CN=D");

    SUBCASE("residual moves to the destination")
    {
        fx.ledger.close_account(a, dest, Access::Admin);
        CHECK(fx.ledger.get_account(dest).available_balance.milli == 25'000);
        CHECK(code_of([&] { fx.ledger.get_account(a); }) == Errc::NoSuchAccount);
        CHECK(code_of([&] { fx.ledger.transfer(dest, a, Money::parse("1.000"), {}); }) ==
              Errc::NoSuchAccount);
        // statements survive closure
        CHECK_NOTHROW(fx.ledger.statement(a, 0, fx.clock->now() + 10));
        // the subject can open a fresh account afterwards
        CHECK_NOTHROW(fx.ledger.create_account("CN=A", "", "G$"));
    }

    SUBCASE("locked funds block closure")
    {
        fx.ledger.lock_funds(a, Money::parse("10.000"), "hold");
        CHECK(code_of([&] { fx.ledger.close_account(a, dest, Access::Admin); }) ==
              Errc::HasLockedFunds);
    }

    SUBCASE("negative balance blocks closure")
    {
        fx.ledger.set_credit_limit(a, Money::parse("50.000"), Access::Admin);
        fx.ledger.withdraw(a, Money::parse("30.000"), Access::Admin);
        CHECK(fx.ledger.get_account(a).available_balance.milli == -5'000);
        CHECK(code_of([&] { fx.ledger.close_account(a, dest, Access::Admin); }) ==
              Errc::NegativeBalance);
    }
}

TEST_CASE("statement filtering equals a brute-force scan")
{
    LedgerFixture fx;
    AccountId a = fx.open("CN=A", 1'000'000);
    AccountId b = fx.open("CN=B", 1'000'000);

    struct Op {
        Timestamp at;
        std::uint64_t txn;
        std::int64_t signed_milli;
    };
    std::vector<Op> mine; // operations touching account a
    std::mt19937_64 rng(99);
    for (int i = 0; i < 60; ++i) {
        fx.clock->advance(60);
        std::int64_t amount = 100 + static_cast<std::int64_t>(rng() % 900);
        if (rng() % 2 == 0) {
            std::uint64_t txn = fx.ledger.transfer(a, b, Money::from_milli(amount), {});
            mine.push_back({fx.clock->now(), txn, -amount});
        } else {
            std::uint64_t txn = fx.ledger.transfer(b, a, Money::from_milli(amount), {});
            mine.push_back({fx.clock->now(), txn, amount});
        }
    }

    Timestamp start = parse_timestamp("2002-08-23T10:20:00Z");
    Timestamp end = parse_timestamp("2002-08-23T10:40:00Z");
    auto stmt = fx.ledger.statement(a, start, end);

    std::vector<Op> expected;
    for (const auto& op : mine) {
        if (op.at >= start && op.at <= end)
            expected.push_back(op);
    }
    REQUIRE(stmt.transactions.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(stmt.transactions[i].transaction_id == expected[i].txn);
        CHECK(stmt.transactions[i].amount.milli == expected[i].signed_milli);
    }
    // every Transfer row has its transfer record attached
    CHECK(stmt.transfers.size() == expected.size());

    // empty range
    auto none = fx.ledger.statement(a, 0, 1);
    CHECK(none.transactions.empty());
    CHECK(none.transfers.empty());

    CHECK(code_of([&] { fx.ledger.statement(a, end, start); }) == Errc::BadRange);
}

TEST_CASE("property: conservation and per-account replay over random operations")
{
    for (std::uint64_t seed : {11u, 22u, 33u}) {
        LedgerFixture fx;
        std::mt19937_64 rng(seed);
        std::vector<AccountId> accounts;
        std::int64_t deposited = 0;
        for (int i = 0; i < 6; ++i) {
            accounts.push_back(fx.open("CN=P" + std::to_string(i), 50'000));
            deposited += 50'000;
        }
        std::vector<std::uint64_t> live_locks;

        for (int step = 0; step < 400; ++step) {
            const AccountId& from = accounts[rng() % accounts.size()];
            const AccountId& to = accounts[rng() % accounts.size()];
            Money amount = Money::from_milli(1 + static_cast<std::int64_t>(rng() % 2'000));
            try {
                switch (rng() % 4) {
                case 0:
                    fx.ledger.transfer(from, to, amount, {});
                    break;
                case 1:
                    live_locks.push_back(fx.ledger.lock_funds(from, amount, "p"));
                    break;
                case 2:
                    if (!live_locks.empty()) {
                        std::uint64_t lock = live_locks[rng() % live_locks.size()];
                        fx.ledger.transfer_from_locked(lock, to, amount, {});
                    }
                    break;
                default:
                    if (!live_locks.empty()) {
                        std::uint64_t lock = live_locks[rng() % live_locks.size()];
                        fx.ledger.release_lock(lock);
                    }
                }
            } catch (const GridBankError&) {
                // rejected operations must leave no trace; conservation below
            }
            CHECK(fx.ledger.total_funds().milli == deposited);
        }

        // per-account replay: available == signed transaction sum - live locks
        for (const auto& id : accounts) {
            auto stmt = fx.ledger.statement(id, 0, fx.clock->now() + 10);
            std::int64_t txn_sum = 0;
            for (const auto& txn : stmt.transactions)
                txn_sum += txn.amount.milli;
            std::int64_t lock_sum = 0;
            for (std::uint64_t lock_id : live_locks) {
                auto lock = fx.ledger.find_lock(lock_id);
                if (lock && lock->account_id == id)
                    lock_sum += lock->remaining.milli;
            }
            Account account = fx.ledger.get_account(id);
            CHECK(account.available_balance.milli == txn_sum - lock_sum);
            CHECK(account.locked_balance.milli == lock_sum);
            CHECK(account.locked_balance.milli >= 0);
            CHECK(account.available_balance.milli >= -account.credit_limit.milli);
        }
    }
}

TEST_CASE("concurrent sessions keep the ledger linearizable")
{
    LedgerFixture fx;
    std::vector<AccountId> accounts;
    for (int i = 0; i < 4; ++i)
        accounts.push_back(fx.open("CN=T" + std::to_string(i), 100'000));

    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            std::mt19937_64 rng(static_cast<std::uint64_t>(t) + 1);
            for (int i = 0; i < 200; ++i) {
                const AccountId& from = accounts[rng() % accounts.size()];
                const AccountId& to = accounts[rng() % accounts.size()];
                try {
                    switch (rng() % 3) {
                    case 0:
                        fx.ledger.transfer(from, to,
                                           Money::from_milli(1 + static_cast<std::int64_t>(
                                                                     rng() % 200)),
                                           {});
                        break;
                    case 1: {
                        std::uint64_t lock = fx.ledger.lock_funds(
                            from, Money::from_milli(1 + static_cast<std::int64_t>(rng() % 200)),
                            "t");
                        fx.ledger.release_lock(lock);
                        break;
                    }
                    default:
                        fx.ledger.get_account(from);
                    }
                } catch (const GridBankError&) {
                }
            }
        });
    }
    for (auto& t : threads)
        t.join();

    CHECK(fx.ledger.total_funds().milli == 400'000);
    for (const auto& id : accounts) {
        Account account = fx.ledger.get_account(id);
        CHECK(account.available_balance.milli >= 0);
        CHECK(account.locked_balance.milli == 0);
    }
}

TEST_CASE("a corrupt journal line aborts startup with a diagnostic")
{
    auto dir = std::filesystem::temp_directory_path() / "gb-ledger-corrupt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto path = dir / "journal.log";

    auto clock = std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    {
        Ledger ledger(clock, std::make_shared<FileJournal>(path));
        ledger.create_account("CN=A", "", "G$");
        ledger.create_account("CN=B", "", "G$");
    }
    // corrupt a line that is not the final one
    {
        std::ofstream app(path, std::ios::app);
        app << "not a record\n";
        app << "{\"Record\":\"Deposited\",\"TransactionID\":1,\"AccountID\":"
               "\"01-0001-00000001\",\"Date\":\"2002-08-23T10:00:00Z\",\"Amount\":\"1.000\"}\n";
    }
    Ledger fresh(clock, std::make_shared<NullJournal>());
    CHECK_THROWS_AS(
        FileJournal::replay(path, [&](const Value& event) { fresh.replay_event(event); }),
        GridBankError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("journal replay rebuilds identical state")
{
    auto dir = std::filesystem::temp_directory_path() / "gb-ledger-journal";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto path = dir / "journal.log";

    auto clock = std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    std::string digest_before;
    {
        Ledger ledger(clock, std::make_shared<FileJournal>(path));
        AccountId a = ledger.create_account("CN=A", "UWA", "G$");
        AccountId b = ledger.create_account("CN=B", "", "G$");
        ledger.deposit(a, Money::parse("100.000"), Access::Admin);
        ledger.deposit(b, Money::parse("20.000"), Access::Admin);
        std::mt19937_64 rng(321);
        for (int i = 0; i < 50; ++i) {
            clock->advance(10);
            Money amount = Money::from_milli(1 + static_cast<std::int64_t>(rng() % 500));
            try {
                switch (rng() % 3) {
                case 0: ledger.transfer(a, b, amount, "blob"); break;
                case 1: ledger.transfer(b, a, amount, {}); break;
                default: {
                    std::uint64_t lock = ledger.lock_funds(a, amount, "l");
                    ledger.transfer_from_locked(lock, b, amount, {});
                }
                }
            } catch (const GridBankError&) {
            }
        }
        digest_before = hex_encode(sha256(ledger.state_value().encode()));
    }

    Ledger replayed(clock, std::make_shared<NullJournal>());
    FileJournal::replay(path, [&](const Value& event) { replayed.replay_event(event); });
    CHECK(hex_encode(sha256(replayed.state_value().encode())) == digest_before);

    // a torn final line is dropped, everything before it survives
    {
        std::ofstream app(path, std::ios::app);
        app << "{\"Record\":\"Transferred\",\"Trunc";
    }
    Ledger tolerant(clock, std::make_shared<NullJournal>());
    FileJournal::replay(path, [&](const Value& event) { tolerant.replay_event(event); });
    CHECK(hex_encode(sha256(tolerant.state_value().encode())) == digest_before);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
