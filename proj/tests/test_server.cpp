#include "gridbank/client.hpp"
#include "gridbank/errors.hpp"
#include "gridbank/server.hpp"

#include <doctest.h>

using namespace gridbank;

namespace {

struct ServerFixture {
    std::shared_ptr<ManualClock> clock =
        std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    std::shared_ptr<KeyRegistry> registry = std::make_shared<KeyRegistry>();
    Identity bank_identity = Identity::generate("CN=GridBank", seeded_random(1));
    Identity admin_identity = Identity::generate("CN=Admin", seeded_random(2));
    std::unique_ptr<Bank> bank;
    std::unique_ptr<BankServer> server;

    ServerFixture()
    {
        registry->register_identity(bank_identity);
        registry->register_identity(admin_identity);
        BankConfig config;
        config.identity = bank_identity;
        config.admins = {"CN=Admin"};
        bank = std::make_unique<Bank>(config, clock, registry, seeded_random(3));
        server = std::make_unique<BankServer>(*bank, "127.0.0.1", 0);
        bank->set_advertised_endpoint(server->endpoint());
        server->start();
    }

    ~ServerFixture()
    {
        server->stop();
    }

    WireClient admin()
    {
        return WireClient("127.0.0.1", server->port(), admin_identity,
                          bank_identity.public_key);
    }
};

} // namespace

TEST_SUITE_BEGIN("server");

TEST_CASE("registered admin connects and operates over the wire")
{
    ServerFixture fx;
    WireClient admin = fx.admin();
    CHECK(admin.welcome().string_at("Role") == "Admin");

    Value params = Value::map();
    params.set("CertificateName", "CN=Alice");
    Value created = admin.call("CreateAccount", std::move(params));
    CHECK(created.string_at("AccountID") == "01-0001-00000001");

    Value deposit = Value::map();
    deposit.set("AccountID", "01-0001-00000001");
    deposit.set("Amount", "10.000");
    CHECK(admin.call("Deposit", std::move(deposit)).int_at("TransactionID") == 1);
}

TEST_CASE("unregistered subject is refused before any request runs")
{
    ServerFixture fx;
    std::string digest = fx.bank->state_digest();

    Identity stranger = Identity::generate("CN=Stranger", seeded_random(9));
    bool refused = false;
    try {
        WireClient client("127.0.0.1", fx.server->port(), stranger);
    } catch (const GridBankError&) {
        refused = true; // handshake dropped or refusal frame
    }
    CHECK(refused);
    CHECK(fx.bank->state_digest() == digest);
}

TEST_CASE("registered subject without an account is refused")
{
    ServerFixture fx;
    Identity known = Identity::generate("CN=KnownButBroke", seeded_random(10));
    fx.registry->register_identity(known);

    try {
        WireClient client("127.0.0.1", fx.server->port(), known);
        FAIL("expected refusal");
    } catch (const GridBankError& e) {
        CHECK(e.code() == Errc::Refused);
    }
}

TEST_CASE("account holder session: owns ops, admin ops forbidden, pairing kept")
{
    ServerFixture fx;
    Identity alice = Identity::generate("CN=Alice", seeded_random(11));
    fx.registry->register_identity(alice);
    {
        WireClient admin = fx.admin();
        Value params = Value::map();
        params.set("CertificateName", "CN=Alice");
        admin.call("CreateAccount", std::move(params));
        Value deposit = Value::map();
        deposit.set("AccountID", "01-0001-00000001");
        deposit.set("Amount", "25.000");
        admin.call("Deposit", std::move(deposit));
    }

    WireClient session("127.0.0.1", fx.server->port(), alice, fx.bank_identity.public_key);
    CHECK(session.welcome().string_at("Role") == "AccountHolder");
    CHECK(session.welcome().string_at("AccountID") == "01-0001-00000001");

    // responses pair with their requests across a burst of calls
    for (int i = 0; i < 20; ++i) {
        Value get = Value::map();
        get.set("AccountID", "01-0001-00000001");
        Value account = session.call("GetAccount", std::move(get));
        CHECK(account.string_at("AvailableBalance") == "25.000");
    }

    Value deposit = Value::map();
    deposit.set("AccountID", "01-0001-00000001");
    deposit.set("Amount", "1.000");
    try {
        session.call("Deposit", std::move(deposit));
        FAIL("expected FORBIDDEN");
    } catch (const GridBankError& e) {
        CHECK(e.code() == Errc::Forbidden);
    }
}

TEST_CASE("a mutated wire frame is rejected")
{
    ServerFixture fx;
    Identity alice = Identity::generate("CN=Alice", seeded_random(12));
    fx.registry->register_identity(alice);
    {
        WireClient admin = fx.admin();
        Value params = Value::map();
        params.set("CertificateName", "CN=Alice");
        admin.call("CreateAccount", std::move(params));
    }

    // open a raw connection, do a proper hello, then send a tampered frame
    TcpConnection raw = TcpConnection::connect("127.0.0.1", fx.server->port());
    raw.send_frame(frame_envelope(alice, make_request(0, "Hello", Value::map())));
    auto welcome = raw.recv_frame();
    REQUIRE(welcome.has_value());

    Value get = Value::map();
    get.set("AccountID", "01-0001-00000001");
    std::string frame = frame_envelope(alice, make_request(1, "GetAccount", std::move(get)));
    std::size_t op_pos = frame.find("GetAccount");
    REQUIRE(op_pos != std::string::npos);
    frame[op_pos] = 'F'; // payload bytes no longer match the signature
    raw.send_frame(frame);
    auto response = raw.recv_frame();
    REQUIRE(response.has_value());
    Value body = Value::parse(SignedEnvelope::from_value(Value::parse(*response)).payload);
    CHECK(body.string_at("Error") == "BAD_SIGNATURE");
}

TEST_CASE("signer differing from the session subject is rejected")
{
    ServerFixture fx;
    Identity alice = Identity::generate("CN=Alice", seeded_random(13));
    Identity bob = Identity::generate("CN=Bob", seeded_random(14));
    fx.registry->register_identity(alice);
    fx.registry->register_identity(bob);
    {
        WireClient admin = fx.admin();
        for (const char* subject : {"CN=Alice", "CN=Bob"}) {
            Value params = Value::map();
            params.set("CertificateName", subject);
            admin.call("CreateAccount", std::move(params));
        }
    }

    TcpConnection raw = TcpConnection::connect("127.0.0.1", fx.server->port());
    raw.send_frame(frame_envelope(alice, make_request(0, "Hello", Value::map())));
    REQUIRE(raw.recv_frame().has_value());

    Value get = Value::map();
    get.set("AccountID", "01-0001-00000002");
    raw.send_frame(frame_envelope(bob, make_request(1, "GetAccount", std::move(get))));
    auto response = raw.recv_frame();
    REQUIRE(response.has_value());
    Value body = Value::parse(SignedEnvelope::from_value(Value::parse(*response)).payload);
    CHECK(body.string_at("Error") == "FORBIDDEN");
}

TEST_CASE("journal replay over a restart preserves the digest (wire)")
{
    auto dir = std::filesystem::temp_directory_path() / "gb-server-restart";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    auto clock = std::make_shared<ManualClock>(parse_timestamp("2002-08-23T10:00:00Z"));
    auto registry = std::make_shared<KeyRegistry>();
    Identity bank_identity = Identity::generate("CN=GridBank", seeded_random(1));
    Identity admin_identity = Identity::generate("CN=Admin", seeded_random(2));
    registry->register_identity(bank_identity);
    registry->register_identity(admin_identity);

    BankConfig config;
    config.identity = bank_identity;
    config.admins = {"CN=Admin"};
    config.journal_path = dir / "journal.log";

    std::string digest;
    {
        Bank bank(config, clock, registry, seeded_random(4));
        BankServer server(bank, "127.0.0.1", 0);
        server.start();
        WireClient admin("127.0.0.1", server.port(), admin_identity);
        Value params = Value::map();
        params.set("CertificateName", "CN=Alice");
        std::string account = admin.call("CreateAccount", std::move(params))
                                  .string_at("AccountID");
        for (int i = 0; i < 20; ++i) {
            Value deposit = Value::map();
            deposit.set("AccountID", account);
            deposit.set("Amount", "1.000");
            admin.call("Deposit", std::move(deposit));
        }
        digest = admin.call("StateDigest", Value::map()).string_at("Digest");
        server.stop();
    }
    {
        Bank bank(config, clock, registry, seeded_random(5));
        BankServer server(bank, "127.0.0.1", 0);
        server.start();
        WireClient admin("127.0.0.1", server.port(), admin_identity);
        CHECK(admin.call("StateDigest", Value::map()).string_at("Digest") == digest);
        server.stop();
    }
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
