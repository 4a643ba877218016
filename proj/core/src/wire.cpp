#include "gridbank/wire.hpp"

#include "gridbank/errors.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace gridbank {

namespace {

void write_all(int fd, const void* data, std::size_t len)
{
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            fail(Errc::IoError, std::string("send: ") + std::strerror(errno));
        }
        p += n;
        len -= static_cast<std::size_t>(n);
    }
}

// true when fully read, false on clean EOF at the first byte
bool read_all(int fd, void* data, std::size_t len)
{
    char* p = static_cast<char*>(data);
    std::size_t got = 0;
    while (got < len) {
        ssize_t n = ::recv(fd, p + got, len - got, 0);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            fail(Errc::IoError, std::string("recv: ") + std::strerror(errno));
        }
        if (n == 0) {
            if (got == 0)
                return false;
            fail(Errc::IoError, "peer closed mid-frame");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

} // namespace

TcpConnection::~TcpConnection()
{
    close();
}

TcpConnection::TcpConnection(TcpConnection&& other) noexcept : fd_(other.fd_)
{
    other.fd_ = -1;
}

TcpConnection& TcpConnection::operator=(TcpConnection&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

TcpConnection TcpConnection::connect(const std::string& host, std::uint16_t port)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &result) != 0)
        fail(Errc::UnreachableEndpoint, "cannot resolve " + host);

    int fd = -1;
    for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0)
            continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0)
            break;
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(result);
    if (fd < 0)
        fail(Errc::UnreachableEndpoint, host + ":" + std::to_string(port));

    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpConnection(fd);
}

TcpConnection TcpConnection::connect_endpoint(const std::string& host_port)
{
    auto [host, port] = split_endpoint(host_port);
    return connect(host, port);
}

void TcpConnection::send_frame(std::string_view payload)
{
    if (!valid())
        fail(Errc::IoError, "send on closed connection");
    if (payload.size() > k_max_frame_bytes)
        fail(Errc::BadMessage, "frame too large");
    std::uint8_t header[4] = {
        static_cast<std::uint8_t>((payload.size() >> 24) & 0xFF),
        static_cast<std::uint8_t>((payload.size() >> 16) & 0xFF),
        static_cast<std::uint8_t>((payload.size() >> 8) & 0xFF),
        static_cast<std::uint8_t>(payload.size() & 0xFF),
    };
    write_all(fd_, header, sizeof header);
    write_all(fd_, payload.data(), payload.size());
}

std::optional<std::string> TcpConnection::recv_frame()
{
    if (!valid())
        return std::nullopt;
    std::uint8_t header[4];
    if (!read_all(fd_, header, sizeof header))
        return std::nullopt;
    std::size_t len = (static_cast<std::size_t>(header[0]) << 24) |
                      (static_cast<std::size_t>(header[1]) << 16) |
                      (static_cast<std::size_t>(header[2]) << 8) | header[3];
    if (len > k_max_frame_bytes)
        fail(Errc::BadMessage, "oversized frame");
    std::string payload(len, '\0');
    if (len > 0 && !read_all(fd_, payload.data(), len))
        fail(Errc::IoError, "peer closed mid-frame");
    return payload;
}

void TcpConnection::shutdown_both()
{
    if (valid())
        ::shutdown(fd_, SHUT_RDWR);
}

void TcpConnection::close()
{
    if (valid()) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener::~TcpListener()
{
    close();
}

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), port_(other.port_)
{
    other.fd_ = -1;
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = other.fd_;
        port_ = other.port_;
        other.fd_ = -1;
    }
    return *this;
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port)
{
    TcpListener listener;
    listener.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener.fd_ < 0)
        fail(Errc::IoError, "socket creation failed");

    int one = 1;
    setsockopt(listener.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        fail(Errc::ConfigError, "bad listen address " + host);
    if (::bind(listener.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        fail(Errc::IoError, "bind " + host + ":" + std::to_string(port) + " failed: " +
                                std::strerror(errno));
    if (::listen(listener.fd_, 64) != 0)
        fail(Errc::IoError, "listen failed");

    socklen_t len = sizeof addr;
    getsockname(listener.fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    listener.port_ = ntohs(addr.sin_port);
    return listener;
}

TcpConnection TcpListener::accept()
{
    if (!valid())
        return TcpConnection();
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0)
        return TcpConnection(); // listener closed or transient failure
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpConnection(fd);
}

void TcpListener::close()
{
    if (valid()) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& host_port)
{
    auto colon = host_port.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == host_port.size())
        fail(Errc::ConfigError, "endpoint must be host:port, got '" + host_port + "'");
    int port = std::stoi(host_port.substr(colon + 1));
    if (port < 1 || port > 65535)
        fail(Errc::ConfigError, "port out of range in '" + host_port + "'");
    return {host_port.substr(0, colon), static_cast<std::uint16_t>(port)};
}

Value make_request(std::uint64_t request_id, std::string_view op, Value params)
{
    Value body = Value::map();
    body.set("RequestID", static_cast<std::int64_t>(request_id));
    body.set("Op", std::string(op));
    body.set("Params", std::move(params));
    return body;
}

std::string frame_envelope(const Identity& identity, const Value& body)
{
    return seal(identity, body.encode()).to_value().encode();
}

} // namespace gridbank
