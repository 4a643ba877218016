#include "gridbank/client.hpp"

#include "gridbank/errors.hpp"

namespace gridbank {

WireClient::WireClient(const std::string& host, std::uint16_t port, Identity identity,
                       std::optional<Bytes> server_key)
    : identity_(std::move(identity))
    , server_key_(std::move(server_key))
    , connection_(TcpConnection::connect(host, port))
{
    Value hello = make_request(0, "Hello", Value::map());
    Value response = roundtrip(hello);
    if (const Value* error = response.find("Error"))
        fail(errc_from_code(error->as_string()).value_or(Errc::Refused),
             response.string_at("Message"));
    welcome_ = response.at("Result");
}

WireClient WireClient::connect_endpoint(const std::string& host_port, Identity identity,
                                        std::optional<Bytes> server_key)
{
    auto [host, port] = split_endpoint(host_port);
    return WireClient(host, port, std::move(identity), std::move(server_key));
}

Value WireClient::roundtrip(const Value& body)
{
    connection_.send_frame(frame_envelope(identity_, body));
    auto frame = connection_.recv_frame();
    if (!frame)
        fail(Errc::UnreachableEndpoint, "connection closed by server");
    SignedEnvelope envelope = SignedEnvelope::from_value(Value::parse(*frame));
    if (server_key_ && !verify_payload(*server_key_, envelope.payload, envelope.signature))
        fail(Errc::BadSignature, "server response signature invalid");
    return Value::parse(envelope.payload);
}

Value WireClient::call_raw(std::string_view op, Value params)
{
    std::uint64_t request_id = next_request_id_++;
    Value response = roundtrip(make_request(request_id, op, std::move(params)));
    if (static_cast<std::uint64_t>(response.int_at("RequestID")) != request_id &&
        response.find("Error") == nullptr)
        fail(Errc::BadMessage, "response pairs with a different request");
    return response;
}

Value WireClient::call(std::string_view op, Value params)
{
    Value response = call_raw(op, std::move(params));
    if (const Value* error = response.find("Error")) {
        auto code = errc_from_code(error->as_string());
        fail(code.value_or(Errc::BadMessage), response.string_at("Message"));
    }
    return response.at("Result");
}

void WireClient::close()
{
    connection_.close();
}

} // namespace gridbank
