#include "gridbank/identity.hpp"

#include "gridbank/errors.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

namespace gridbank {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

PkeyPtr private_key_from_seed(std::span<const std::uint8_t> seed)
{
    if (seed.size() != 32)
        fail(Errc::BadParameters, "ed25519 seed must be 32 bytes");
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
    if (!key)
        fail(Errc::IoError, "ed25519 key construction failed");
    return key;
}

PkeyPtr public_key_from_raw(std::span<const std::uint8_t> raw)
{
    if (raw.size() != 32)
        return nullptr;
    return PkeyPtr(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, raw.data(), raw.size()));
}

} // namespace

Identity Identity::generate(std::string subject, const RandomSource& random)
{
    std::array<std::uint8_t, 32> seed{};
    random(seed);
    return from_seed(std::move(subject), seed);
}

Identity Identity::from_seed(std::string subject, std::span<const std::uint8_t> seed)
{
    if (subject.empty())
        fail(Errc::BadParameters, "empty subject");
    PkeyPtr key = private_key_from_seed(seed);
    std::size_t publen = 32;
    Bytes pub(publen);
    if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &publen) != 1 || publen != 32)
        fail(Errc::IoError, "ed25519 public key extraction failed");
    return Identity{std::move(subject), std::move(pub), Bytes(seed.begin(), seed.end())};
}

Value Identity::to_value() const
{
    Value v = Value::map();
    v.set("Subject", subject);
    v.set("PublicKey", base64_encode(public_key));
    if (!private_seed.empty())
        v.set("PrivateSeed", base64_encode(private_seed));
    return v;
}

Identity Identity::from_value(const Value& v)
{
    Identity id;
    id.subject = v.string_at("Subject");
    id.public_key = base64_decode(v.string_at("PublicKey"));
    if (const Value* seed = v.find("PrivateSeed"))
        id.private_seed = base64_decode(seed->as_string());
    if (!id.private_seed.empty()) {
        Identity derived = from_seed(id.subject, id.private_seed);
        if (derived.public_key != id.public_key)
            fail(Errc::BadMessage, "identity file key mismatch");
    }
    return id;
}

void Identity::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(Errc::IoError, "cannot write " + path.string());
    out << to_value().encode() << '\n';
}

Identity Identity::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(Errc::IoError, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_value(Value::parse(buf.str()));
}

Bytes sign_payload(const Identity& identity, std::string_view payload)
{
    if (identity.private_seed.empty())
        fail(Errc::BadParameters, "identity has no signing key");
    PkeyPtr key = private_key_from_seed(identity.private_seed);
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        fail(Errc::IoError, "signature init failed");
    std::size_t siglen = 64;
    Bytes sig(siglen);
    if (EVP_DigestSign(ctx.get(), sig.data(), &siglen,
                       reinterpret_cast<const std::uint8_t*>(payload.data()),
                       payload.size()) != 1)
        fail(Errc::IoError, "signing failed");
    sig.resize(siglen);
    return sig;
}

bool verify_payload(std::span<const std::uint8_t> public_key, std::string_view payload,
                    std::span<const std::uint8_t> signature)
{
    PkeyPtr key = public_key_from_raw(public_key);
    if (!key || signature.size() != 64)
        return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        return false;
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            reinterpret_cast<const std::uint8_t*>(payload.data()),
                            payload.size()) == 1;
}

Value SignedEnvelope::to_value() const
{
    Value v = Value::map();
    v.set("Payload", payload);
    v.set("Signer", signer);
    v.set("Signature", base64_encode(signature));
    return v;
}

SignedEnvelope SignedEnvelope::from_value(const Value& v)
{
    SignedEnvelope env;
    env.payload = v.string_at("Payload");
    env.signer = v.string_at("Signer");
    env.signature = base64_decode(v.string_at("Signature"));
    return env;
}

SignedEnvelope seal(const Identity& identity, std::string payload)
{
    SignedEnvelope env;
    env.signature = sign_payload(identity, payload);
    env.payload = std::move(payload);
    env.signer = identity.subject;
    return env;
}

SignedEnvelope seal(const Identity& identity, const Value& payload)
{
    return seal(identity, payload.encode());
}

void KeyRegistry::register_identity(const std::string& subject, Bytes public_key)
{
    if (subject.empty())
        fail(Errc::BadParameters, "empty subject");
    std::lock_guard lock(mutex_);
    if (!keys_.emplace(subject, std::move(public_key)).second)
        fail(Errc::DuplicateSubject, subject);
}

void KeyRegistry::register_identity(const Identity& identity)
{
    register_identity(identity.subject, identity.public_key);
}

std::optional<Bytes> KeyRegistry::lookup(const std::string& subject) const
{
    std::lock_guard lock(mutex_);
    auto it = keys_.find(subject);
    if (it == keys_.end())
        return std::nullopt;
    return it->second;
}

std::size_t KeyRegistry::size() const
{
    std::lock_guard lock(mutex_);
    return keys_.size();
}

std::string KeyRegistry::verify_envelope(const SignedEnvelope& envelope) const
{
    auto key = lookup(envelope.signer);
    if (!key)
        fail(Errc::UnknownSubject, envelope.signer);
    if (!verify_payload(*key, envelope.payload, envelope.signature))
        fail(Errc::BadSignature, "envelope signature check failed");
    return envelope.signer;
}

void KeyRegistry::load_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(Errc::ConfigError, "cannot read key registry " + path.string());
    std::string line;
    std::lock_guard lock(mutex_);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            fail(Errc::ConfigError, "malformed registry line: " + line);
        std::string subject = line.substr(0, tab);
        Bytes key = base64_decode(line.substr(tab + 1));
        keys_.insert_or_assign(std::move(subject), std::move(key));
    }
}

void KeyRegistry::save_file(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(Errc::IoError, "cannot write key registry " + path.string());
    std::lock_guard lock(mutex_);
    for (const auto& [subject, key] : keys_)
        out << subject << '\t' << base64_encode(key) << '\n';
}

std::string_view role_name(Role role)
{
    return role == Role::Admin ? "Admin" : "AccountHolder";
}

std::optional<Role> authorize_connection(
    const std::set<std::string>& admin_table,
    const std::function<bool(const std::string&)>& has_open_account,
    const std::string& subject)
{
    if (admin_table.contains(subject))
        return Role::Admin;
    if (has_open_account && has_open_account(subject))
        return Role::AccountHolder;
    return std::nullopt;
}

std::set<std::string> load_admin_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(Errc::ConfigError, "cannot read admin table " + path.string());
    std::set<std::string> admins;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty())
            admins.insert(line);
    }
    return admins;
}

void save_admin_table(const std::filesystem::path& path, const std::set<std::string>& admins)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        fail(Errc::IoError, "cannot write admin table " + path.string());
    for (const auto& subject : admins)
        out << subject << '\n';
}

} // namespace gridbank
