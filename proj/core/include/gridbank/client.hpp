#pragma once

#include "gridbank/identity.hpp"
#include "gridbank/wire.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace gridbank {

/// One authenticated session against a framed-protocol server (bank or
/// provider). Sends the signed hello on connect and pairs every request
/// with its response by RequestID.
class WireClient {
public:
    WireClient() = default;
    WireClient(const std::string& host, std::uint16_t port, Identity identity,
               std::optional<Bytes> server_key = std::nullopt);

    static WireClient connect_endpoint(const std::string& host_port, Identity identity,
                                       std::optional<Bytes> server_key = std::nullopt);

    bool connected() const { return connection_.valid(); }
    const Value& welcome() const { return welcome_; }
    const std::string& subject() const { return identity_.subject; }

    /// Sends one op; returns the Result value or throws the structured error
    /// the server reported.
    Value call(std::string_view op, Value params);

    /// Same, but returns the whole response body (RequestID/Result or
    /// RequestID/Error/Message) without throwing on server-side errors.
    Value call_raw(std::string_view op, Value params);

    void close();

private:
    Value roundtrip(const Value& body);

    Identity identity_;
    std::optional<Bytes> server_key_; // responses verified when present
    TcpConnection connection_;
    Value welcome_;
    std::uint64_t next_request_id_ = 1;
};

} // namespace gridbank
