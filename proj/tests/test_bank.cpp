#include "gridbank/bank.hpp"
#include "gridbank/errors.hpp"
#include "gridbank/wire.hpp"

#include <doctest.h>

#include <random>

using namespace gridbank;

namespace {

struct BankFixture {
    std::shared_ptr<ManualClock> clock =
        std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    std::shared_ptr<KeyRegistry> registry = std::make_shared<KeyRegistry>();
    Identity bank_identity = Identity::generate("CN=GridBank", seeded_random(1));
    std::unique_ptr<Bank> bank;

    BankFixture()
    {
        registry->register_identity(bank_identity);
        BankConfig config;
        config.identity = bank_identity;
        config.endpoint = "127.0.0.1:7001";
        config.admins = {"CN=Admin"};
        bank = std::make_unique<Bank>(config, clock, registry, seeded_random(2));
    }

    Value call(const std::string& subject, Role role, std::string_view op, Value params)
    {
        return bank->dispatch(subject, role, make_request(1, op, std::move(params)));
    }

    AccountId open(const std::string& subject, const std::string& deposit = "")
    {
        Value params = Value::map();
        params.set("CertificateName", subject);
        Value response = call("CN=Admin", Role::Admin, "CreateAccount", std::move(params));
        AccountId id = AccountId::parse(response.at("Result").string_at("AccountID"));
        if (!deposit.empty()) {
            Value d = Value::map();
            d.set("AccountID", id.text());
            d.set("Amount", deposit);
            call("CN=Admin", Role::Admin, "Deposit", std::move(d));
        }
        return id;
    }
};

} // namespace

TEST_SUITE_BEGIN("bank");

TEST_CASE("authorization gate: admins, holders, strangers")
{
    BankFixture fx;
    fx.open("CN=Alice");
    CHECK(fx.bank->authorize("CN=Admin") == Role::Admin);
    CHECK(fx.bank->authorize("CN=Alice") == Role::AccountHolder);
    CHECK(fx.bank->authorize("CN=Stranger") == std::nullopt);
}

TEST_CASE("dispatch echoes the request id and wraps results")
{
    BankFixture fx;
    Value params = Value::map();
    params.set("CertificateName", "CN=Alice");
    Value response =
        fx.bank->dispatch("CN=Admin", Role::Admin, make_request(42, "CreateAccount",
                                                                 std::move(params)));
    CHECK(response.int_at("RequestID") == 42);
    CHECK(response.at("Result").string_at("AccountID") == "01-0001-00000001");
}

TEST_CASE("admin ops reject account holders with Forbidden")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "50.000");

    for (std::string_view op : {"Deposit", "Withdraw"}) {
        Value params = Value::map();
        params.set("AccountID", alice.text());
        params.set("Amount", "1.000");
        Value response = fx.call("CN=Alice", Role::AccountHolder, op, std::move(params));
        CHECK(response.string_at("Error") == "FORBIDDEN");
    }
    {
        Value params = Value::map();
        params.set("AccountID", alice.text());
        params.set("CreditLimit", "5.000");
        CHECK(fx.call("CN=Alice", Role::AccountHolder, "SetCreditLimit", std::move(params))
                  .string_at("Error") == "FORBIDDEN");
    }
    {
        Value params = Value::map();
        params.set("TransactionID", 1);
        CHECK(fx.call("CN=Alice", Role::AccountHolder, "CancelTransfer", std::move(params))
                  .string_at("Error") == "FORBIDDEN");
    }
    // balance unchanged by the refused attempts
    Value get = Value::map();
    get.set("AccountID", alice.text());
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "GetAccount", std::move(get))
              .at("Result")
              .string_at("AvailableBalance") == "50.000");
}

TEST_CASE("account scoping: a holder cannot touch another holder's account")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "50.000");
    AccountId bob = fx.open("CN=Bob", "50.000");

    Value get = Value::map();
    get.set("AccountID", bob.text());
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "GetAccount", std::move(get))
              .string_at("Error") == "FORBIDDEN");

    // a transfer drawn on someone else's account is forbidden
    Value xfer = Value::map();
    xfer.set("DrawerAccountID", bob.text());
    xfer.set("RecipientAccountID", alice.text());
    xfer.set("Amount", "1.000");
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "Transfer", std::move(xfer))
              .string_at("Error") == "FORBIDDEN");

    // the owner path works
    Value own = Value::map();
    own.set("DrawerAccountID", alice.text());
    own.set("RecipientAccountID", bob.text());
    own.set("Amount", "1.000");
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "Transfer", std::move(own))
              .at("Result")
              .int_at("TransactionID") > 0);
}

TEST_CASE("malformed params become SchemaViolation and leave the ledger untouched")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "50.000");
    std::string digest = fx.bank->state_digest();

    SUBCASE("missing field")
    {
        Value params = Value::map();
        params.set("AccountID", alice.text());
        CHECK(fx.call("CN=Admin", Role::Admin, "Deposit", std::move(params))
                  .string_at("Error") == "SCHEMA_VIOLATION");
    }
    SUBCASE("wrong type")
    {
        Value params = Value::map();
        params.set("AccountID", alice.text());
        params.set("Amount", 5); // must be a decimal string
        CHECK(fx.call("CN=Admin", Role::Admin, "Deposit", std::move(params))
                  .string_at("Error") == "SCHEMA_VIOLATION");
    }
    SUBCASE("unknown field")
    {
        Value params = Value::map();
        params.set("AccountID", alice.text());
        params.set("Amount", "1.000");
        params.set("Backdoor", 1);
        CHECK(fx.call("CN=Admin", Role::Admin, "Deposit", std::move(params))
                  .string_at("Error") == "SCHEMA_VIOLATION");
    }
    SUBCASE("unknown op")
    {
        CHECK(fx.call("CN=Admin", Role::Admin, "MintMoney", Value::map()).string_at("Error") ==
              "UNKNOWN_OP");
    }
    CHECK(fx.bank->state_digest() == digest);
}

TEST_CASE("update ignores submitted balance fields")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "10.000");

    Value params = Value::map();
    params.set("AccountID", alice.text());
    params.set("CertificateName", "CN=Alice");
    params.set("OrganizationName", "UniMelb");
    params.set("AvailableBalance", "999.000");
    params.set("CreditLimit", "999.000");
    Value response = fx.call("CN=Alice", Role::AccountHolder, "UpdateAccount", std::move(params));
    CHECK(response.find("Error") == nullptr);

    Value get = Value::map();
    get.set("AccountID", alice.text());
    Value record = fx.call("CN=Alice", Role::AccountHolder, "GetAccount", std::move(get))
                       .at("Result");
    CHECK(record.string_at("OrganizationName") == "UniMelb");
    CHECK(record.string_at("AvailableBalance") == "10.000");
    CHECK(record.string_at("CreditLimit") == "0.000");
}

TEST_CASE("fuzz: no admin op ever executes for an account holder")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "100.000");
    AccountId bob = fx.open("CN=Bob", "100.000");

    const std::vector<std::string> admin_ops = {"Deposit", "Withdraw", "SetCreditLimit",
                                                "CancelTransfer", "CloseAccount", "SweepExpired",
                                                "StateDigest"};
    std::string digest = fx.bank->state_digest();
    std::mt19937_64 rng(55);
    for (int round = 0; round < 200; ++round) {
        const std::string& op = admin_ops[rng() % admin_ops.size()];
        Value params = Value::map();
        params.set("AccountID", (rng() % 2 ? alice : bob).text());
        params.set("Amount", "1.000");
        params.set("CreditLimit", "1.000");
        params.set("TransactionID", static_cast<std::int64_t>(rng() % 5));
        params.set("DestinationAccountID", alice.text());
        Value response = fx.call("CN=Alice", Role::AccountHolder, op, std::move(params));
        const Value* error = response.find("Error");
        REQUIRE(error != nullptr);
        CHECK((error->as_string() == "FORBIDDEN" || error->as_string() == "SCHEMA_VIOLATION"));
    }
    CHECK(fx.bank->state_digest() == digest);
}

TEST_CASE("redeem batch applies items in order with per-item outcomes")
{
    BankFixture fx;
    AccountId gsc = fx.open("CN=GSC", "100.000");
    fx.open("CN=GSP");

    auto issue = [&](const std::string& limit) {
        Value params = Value::map();
        params.set("DrawerAccountID", gsc.text());
        params.set("PayeeCertificateName", "CN=GSP");
        params.set("AmountLimit", limit);
        params.set("TTLSeconds", 600);
        return fx.call("CN=GSC", Role::AccountHolder, "IssueCheque", std::move(params))
            .at("Result")
            .at("Cheque");
    };
    Value c1 = issue("10.000");
    Value c2 = issue("20.000");

    auto item = [&](const Value& cheque, const char* claim) {
        Value v = Value::map();
        v.set("Kind", "Cheque");
        v.set("Cheque", cheque);
        v.set("Claim", claim);
        return v;
    };

    Value items = Value::list();
    items.push(item(c1, "10.000"));
    items.push(item(c1, "1.000")); // second redemption of the same cheque
    items.push(item(c2, "15.000"));
    Value params = Value::map();
    params.set("Items", std::move(items));
    Value response = fx.call("CN=GSP", Role::AccountHolder, "RedeemBatch", std::move(params));
    const Value::List& results = response.at("Result").at("Results").as_list();
    REQUIRE(results.size() == 3);
    CHECK(results[0].find("Ok") != nullptr);
    CHECK(results[1].string_at("Error") == "ALREADY_REDEEMED");
    CHECK(results[2].find("Ok") != nullptr);

    Value get = Value::map();
    get.set("AccountID", fx.bank->ledger().account_for_subject("CN=GSP")->text());
    CHECK(fx.call("CN=Admin", Role::Admin, "GetAccount", std::move(get))
              .at("Result")
              .string_at("AvailableBalance") == "25.000");
}

TEST_CASE("lock operations route through dispatch with owner scoping")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "100.000");
    AccountId bob = fx.open("CN=Bob");

    Value lock_params = Value::map();
    lock_params.set("AccountID", alice.text());
    lock_params.set("Amount", "60.000");
    lock_params.set("Purpose", "CHQ-X");
    std::int64_t lock_id = fx.call("CN=Alice", Role::AccountHolder, "LockFunds",
                                   std::move(lock_params))
                               .at("Result")
                               .int_at("LockID");

    // another holder cannot spend from the lock
    Value steal = Value::map();
    steal.set("LockID", lock_id);
    steal.set("RecipientAccountID", bob.text());
    steal.set("Amount", "10.000");
    CHECK(fx.call("CN=Bob", Role::AccountHolder, "TransferFromLocked", std::move(steal))
              .string_at("Error") == "FORBIDDEN");

    Value pay = Value::map();
    pay.set("LockID", lock_id);
    pay.set("RecipientAccountID", bob.text());
    pay.set("Amount", "45.000");
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "TransferFromLocked", std::move(pay))
              .find("Error") == nullptr);

    Value release = Value::map();
    release.set("LockID", lock_id);
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "ReleaseLock", std::move(release))
              .find("Error") == nullptr);

    Value get = Value::map();
    get.set("AccountID", alice.text());
    CHECK(fx.call("CN=Alice", Role::AccountHolder, "GetAccount", std::move(get))
              .at("Result")
              .string_at("AvailableBalance") == "55.000");
}

TEST_CASE("direct transfer commits even when the confirmation endpoint is down")
{
    BankFixture fx;
    AccountId alice = fx.open("CN=Alice", "10.000");
    AccountId shop = fx.open("CN=Shop");

    Value params = Value::map();
    params.set("DrawerAccountID", alice.text());
    params.set("RecipientAccountID", shop.text());
    params.set("Amount", "2.000");
    params.set("ConfirmationEndpoint", "127.0.0.1:1"); // nothing listens there
    Value result = fx.call("CN=Alice", Role::AccountHolder, "DirectTransferPayment",
                           std::move(params))
                       .at("Result");
    CHECK(result.int_at("TransactionID") > 0);
    CHECK(result.int_at("ConfirmationDelivered") == 0);
    CHECK(result.string_at("ConfirmationError") == "UNREACHABLE_ENDPOINT");
    CHECK(fx.bank->ledger().get_account(shop).available_balance.text() == "2.000");
}

TEST_CASE("journaled bank survives restart with an identical digest")
{
    auto dir = std::filesystem::temp_directory_path() / "gb-bank-journal";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    auto clock = std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    auto registry = std::make_shared<KeyRegistry>();
    Identity bank_identity = Identity::generate("CN=GridBank", seeded_random(1));
    registry->register_identity(bank_identity);

    BankConfig config;
    config.identity = bank_identity;
    config.admins = {"CN=Admin"};
    config.journal_path = dir / "journal.log";

    std::string digest;
    {
        Bank bank(config, clock, registry, seeded_random(77));
        Value params = Value::map();
        params.set("CertificateName", "CN=Alice");
        Value created =
            bank.dispatch("CN=Admin", Role::Admin, make_request(1, "CreateAccount",
                                                                 std::move(params)));
        std::string account = created.at("Result").string_at("AccountID");
        Value deposit = Value::map();
        deposit.set("AccountID", account);
        deposit.set("Amount", "75.000");
        bank.dispatch("CN=Admin", Role::Admin, make_request(2, "Deposit", std::move(deposit)));
        digest = bank.state_digest();
    }
    Bank restarted(config, clock, registry, seeded_random(78));
    CHECK(restarted.state_digest() == digest);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
