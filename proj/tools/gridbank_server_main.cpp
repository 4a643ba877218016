// gridbank-server: the bank process. Accepts framed, signed requests from
// account holders and administrators; persists every committed operation to
// the append-only journal and replays it on startup.

#include "gridbank/bank.hpp"
#include "gridbank/server.hpp"

#include "gridbank/errors.hpp"

#include "common.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int)
{
    g_stop.store(true);
}

} // namespace

int main(int argc, char** argv)
{
    using namespace gridbank;

    CLI::App app{"GridBank accounting and micropayment server"};
    std::string listen = "127.0.0.1:7077";
    std::string journal = tools::default_path("journal.log");
    std::string keys = tools::default_path("keys.reg");
    std::string admins = tools::default_path("admins");
    std::string identity_file = tools::default_path("bank.key");
    std::string currency = "G$";
    app.add_option("--listen", listen, "listen address host:port")->capture_default_str();
    app.add_option("--journal", journal, "append-only journal path")->capture_default_str();
    app.add_option("--keys", keys, "key registry file (subject TAB base64 key)")
        ->capture_default_str();
    app.add_option("--admins", admins, "administrator table, one subject per line")
        ->capture_default_str();
    app.add_option("--identity", identity_file, "bank signing identity key file")
        ->capture_default_str();
    app.add_option("--currency", currency, "ledger currency code")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        auto [host, port] = split_endpoint(listen);
        auto registry = std::make_shared<KeyRegistry>();
        registry->load_file(keys);

        BankConfig config;
        config.identity = Identity::load(identity_file);
        config.admins = load_admin_table(admins);
        config.currency = currency;
        config.journal_path = journal;
        if (!registry->lookup(config.identity.subject))
            registry->register_identity(config.identity);

        auto clock = std::make_shared<SystemClock>();
        Bank bank(config, clock, registry);

        BankServer server(bank, host, port);
        bank.set_advertised_endpoint(server.endpoint());
        server.start();
        std::cerr << "gridbank-server listening on " << server.endpoint() << " as "
                  << config.identity.subject << "\n";

        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (!g_stop.load()) {
            struct timespec ts = {0, 200'000'000};
            nanosleep(&ts, nullptr);
        }
        std::cerr << "shutting down\n";
        server.stop();
        return 0;
    } catch (const GridBankError& e) {
        std::cerr << "startup failed: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "startup failed: " << e.what() << "\n";
        return 1;
    }
}
