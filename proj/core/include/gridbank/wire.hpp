#pragma once

#include "gridbank/canonical.hpp"
#include "gridbank/identity.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace gridbank {

/// Transport framing: 4-byte big-endian payload length followed by the
/// canonical-text payload, over a stream socket.
constexpr std::size_t k_max_frame_bytes = 16 * 1024 * 1024;

/// RAII wrapper around one connected stream socket.
class TcpConnection {
public:
    TcpConnection() = default;
    explicit TcpConnection(int fd) : fd_(fd) {}
    ~TcpConnection();
    TcpConnection(TcpConnection&& other) noexcept;
    TcpConnection& operator=(TcpConnection&& other) noexcept;
    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    static TcpConnection connect(const std::string& host, std::uint16_t port);
    static TcpConnection connect_endpoint(const std::string& host_port);

    bool valid() const { return fd_ >= 0; }
    void send_frame(std::string_view payload);
    /// nullopt on orderly peer close; throws on protocol/socket errors.
    std::optional<std::string> recv_frame();
    void shutdown_both();
    void close();

private:
    int fd_ = -1;
};

/// Listening socket; port 0 binds an ephemeral port (read back via port()).
class TcpListener {
public:
    TcpListener() = default;
    ~TcpListener();
    TcpListener(TcpListener&& other) noexcept;
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    static TcpListener bind(const std::string& host, std::uint16_t port);

    std::uint16_t port() const { return port_; }
    /// Blocks; returns an invalid connection once close() is called.
    TcpConnection accept();
    void close();
    bool valid() const { return fd_ >= 0; }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& host_port);

/// Request body as signed and framed: {"Op":..,"Params":{..},"RequestID":n}.
Value make_request(std::uint64_t request_id, std::string_view op, Value params);

/// Wraps a body in a signed envelope frame.
std::string frame_envelope(const Identity& identity, const Value& body);

} // namespace gridbank
