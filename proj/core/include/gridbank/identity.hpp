#pragma once

#include "gridbank/canonical.hpp"
#include "gridbank/crypto.hpp"

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>

namespace gridbank {

/// Ed25519 identity. The subject string is the Grid-wide unique client id
/// (a certificate-style name such as "CN=Alice,O=UWA"); the seed stays on
/// the client side.
struct Identity {
    std::string subject;
    Bytes public_key;   // 32 bytes
    Bytes private_seed; // 32 bytes, empty on verify-only identities

    static Identity generate(std::string subject, const RandomSource& random = os_random());
    static Identity from_seed(std::string subject, std::span<const std::uint8_t> seed);

    Value to_value() const; // includes the seed; for identity key files
    static Identity from_value(const Value& v);
    void save(const std::filesystem::path& path) const;
    static Identity load(const std::filesystem::path& path);
};

Bytes sign_payload(const Identity& identity, std::string_view payload);
bool verify_payload(std::span<const std::uint8_t> public_key, std::string_view payload,
                    std::span<const std::uint8_t> signature);

/// Detached signature over exact canonical payload bytes. Any mutation of
/// the payload, signer or signature invalidates the envelope.
struct SignedEnvelope {
    std::string payload;
    std::string signer;
    Bytes signature;

    Value to_value() const;
    static SignedEnvelope from_value(const Value& v);
};

SignedEnvelope seal(const Identity& identity, std::string payload);
SignedEnvelope seal(const Identity& identity, const Value& payload);

/// subject -> verification key. Read-mostly; registration is serialized.
class KeyRegistry {
public:
    void register_identity(const std::string& subject, Bytes public_key); // DuplicateSubject
    void register_identity(const Identity& identity);
    std::optional<Bytes> lookup(const std::string& subject) const;
    std::size_t size() const;

    /// Returns the signer subject iff the signature verifies against the
    /// registered key. Throws UnknownSubject / BadSignature.
    std::string verify_envelope(const SignedEnvelope& envelope) const;

    void load_file(const std::filesystem::path& path);
    void save_file(const std::filesystem::path& path) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Bytes> keys_;
};

enum class Role { AccountHolder, Admin };

std::string_view role_name(Role role);

/// Connection gate: admins connect with privileged access, subjects holding
/// an open account connect as account holders, everyone else is refused
/// before any request is processed.
std::optional<Role> authorize_connection(
    const std::set<std::string>& admin_table,
    const std::function<bool(const std::string&)>& has_open_account,
    const std::string& subject);

std::set<std::string> load_admin_table(const std::filesystem::path& path);
void save_admin_table(const std::filesystem::path& path, const std::set<std::string>& admins);

} // namespace gridbank
