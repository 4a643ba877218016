#include "gridbank/server.hpp"

#include "gridbank/errors.hpp"

namespace gridbank {

namespace {

Value error_body(std::int64_t request_id, Errc code, const std::string& message)
{
    Value v = Value::map();
    v.set("RequestID", request_id);
    v.set("Error", std::string(errc_code(code)));
    v.set("Message", message);
    return v;
}

} // namespace

BankServer::BankServer(Bank& bank, std::string listen_host, std::uint16_t listen_port)
    : bank_(bank)
    , host_(std::move(listen_host))
    , listener_(TcpListener::bind(host_, listen_port))
{
}

BankServer::~BankServer()
{
    stop();
}

void BankServer::start()
{
    if (running_.exchange(true))
        return;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void BankServer::stop()
{
    if (!running_.exchange(false))
        return;
    listener_.close();
    if (accept_thread_.joinable())
        accept_thread_.join();
    std::vector<Session> sessions;
    {
        std::lock_guard lock(sessions_mutex_);
        sessions.swap(sessions_);
    }
    for (auto& session : sessions) {
        session.connection->shutdown_both(); // unblocks the session's recv
        if (session.thread.joinable())
            session.thread.join();
    }
}

void BankServer::accept_loop()
{
    while (running_) {
        auto connection = std::make_shared<TcpConnection>(listener_.accept());
        if (!connection->valid())
            break;
        reap_finished_sessions();
        auto done = std::make_shared<std::atomic<bool>>(false);
        std::lock_guard lock(sessions_mutex_);
        sessions_.push_back({std::thread([this, connection, done] { session(connection, done); }),
                             connection, done});
    }
}

void BankServer::reap_finished_sessions()
{
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.begin();
    while (it != sessions_.end()) {
        if (it->done->load()) {
            it->thread.join();
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

void BankServer::session(std::shared_ptr<TcpConnection> connection_ptr,
                         std::shared_ptr<std::atomic<bool>> done)
{
    session_loop(*connection_ptr);
    // shutdown (not close) so stop() can still safely poke the same fd
    connection_ptr->shutdown_both();
    done->store(true);
}

void BankServer::session_loop(TcpConnection& connection)
{
    std::string subject;
    Role role = Role::AccountHolder;
    try {
        // Session handshake: a signed hello, then connection authorization.
        auto hello_frame = connection.recv_frame();
        if (!hello_frame)
            return;
        SignedEnvelope hello = SignedEnvelope::from_value(Value::parse(*hello_frame));
        subject = bank_.registry().verify_envelope(hello);
        Value hello_body = Value::parse(hello.payload);
        if (hello_body.string_at("Op") != "Hello")
            fail(Errc::BadMessage, "expected Hello");

        auto authorized = bank_.authorize(subject);
        if (!authorized) {
            // Refused before any request is processed.
            Value refusal = error_body(hello_body.int_at("RequestID"), Errc::Refused,
                                       "subject holds no account and is not an administrator");
            connection.send_frame(frame_envelope(bank_.config().identity, refusal));
            return;
        }
        role = *authorized;

        Value welcome = Value::map();
        welcome.set("RequestID", hello_body.int_at("RequestID"));
        Value result = Value::map();
        result.set("Role", std::string(role_name(role)));
        if (auto account = bank_.ledger().account_for_subject(subject))
            result.set("AccountID", account->text());
        welcome.set("Result", std::move(result));
        connection.send_frame(frame_envelope(bank_.config().identity, welcome));
    } catch (const GridBankError&) {
        return; // bad handshake: drop without processing anything
    } catch (const std::exception&) {
        return;
    }

    // Request loop: in-order processing within the session.
    while (running_) {
        Value response;
        try {
            auto frame = connection.recv_frame();
            if (!frame)
                return;
            SignedEnvelope envelope = SignedEnvelope::from_value(Value::parse(*frame));
            if (envelope.signer != subject) {
                response = error_body(0, Errc::Forbidden, "signer differs from session subject");
            } else {
                bank_.registry().verify_envelope(envelope);
                response = bank_.dispatch(subject, role, Value::parse(envelope.payload));
            }
        } catch (const GridBankError& e) {
            response = error_body(0, e.code(), e.what());
        } catch (const std::exception& e) {
            response = error_body(0, Errc::BadMessage, e.what());
        }
        try {
            connection.send_frame(frame_envelope(bank_.config().identity, response));
        } catch (const GridBankError&) {
            return; // peer went away mid-response
        }
    }
}

} // namespace gridbank
