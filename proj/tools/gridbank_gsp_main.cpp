// gridbank-gsp: runs one provider node — trade service, charging module and
// resource meter — behind a single request port for consumers.

#include "gridbank/gsp.hpp"

#include "gridbank/errors.hpp"

#include "common.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

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

    CLI::App app{"GridBank service provider node (GTS + GBCM + GRM)"};
    std::string config_path = tools::default_path("gsp.conf");
    std::string keys = tools::default_path("keys.reg");
    std::string listen = "127.0.0.1:7090";
    std::int64_t flush_every = 30;
    app.add_option("--config", config_path, "provider config file (canonical text)")
        ->capture_default_str();
    app.add_option("--keys", keys, "key registry file")->capture_default_str();
    app.add_option("--listen", listen, "listen address host:port")->capture_default_str();
    app.add_option("--flush-seconds", flush_every,
                   "interval between redemption batch flushes (0 disables)")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in)
            fail(Errc::ConfigError, "cannot read config " + config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        ProviderConfig config = ProviderConfig::from_value(
            Value::parse(buf.str()), std::filesystem::path(config_path).parent_path());

        auto registry = std::make_shared<KeyRegistry>();
        registry->load_file(keys);
        auto clock = std::make_shared<SystemClock>();

        Provider provider(std::move(config), clock, registry);
        auto [host, port] = split_endpoint(listen);
        ProviderServer server(provider, host, port);
        server.start();
        std::cerr << "gridbank-gsp listening on " << server.endpoint() << " as "
                  << provider.config().identity.subject << "\n";

        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        std::int64_t since_flush = 0;
        while (!g_stop.load()) {
            struct timespec ts = {0, 200'000'000};
            nanosleep(&ts, nullptr);
            since_flush += 1;
            if (flush_every > 0 && since_flush >= flush_every * 5) {
                since_flush = 0;
                try {
                    provider.redeem_batch();
                } catch (const GridBankError& e) {
                    std::cerr << "redemption flush: " << e.what() << "\n";
                }
            }
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
