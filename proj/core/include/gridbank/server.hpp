#pragma once

#include "gridbank/bank.hpp"
#include "gridbank/wire.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace gridbank {

/// Network front of the bank: accepts concurrent connections, authenticates
/// the hello envelope, authorizes the subject, then processes framed
/// requests in arrival order for that session. Refused sessions are closed
/// before any request is parsed.
class BankServer {
public:
    BankServer(Bank& bank, std::string listen_host, std::uint16_t listen_port);
    ~BankServer();

    void start();
    void stop();
    std::uint16_t port() const { return listener_.port(); }
    const std::string& host() const { return host_; }
    std::string endpoint() const { return host_ + ":" + std::to_string(port()); }

private:
    struct Session {
        std::thread thread;
        std::shared_ptr<TcpConnection> connection;
        std::shared_ptr<std::atomic<bool>> done;
    };

    void accept_loop();
    void reap_finished_sessions();
    void session(std::shared_ptr<TcpConnection> connection,
                 std::shared_ptr<std::atomic<bool>> done);
    void session_loop(TcpConnection& connection);

    Bank& bank_;
    std::string host_;
    TcpListener listener_;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex sessions_mutex_;
    std::vector<Session> sessions_;
};

} // namespace gridbank
