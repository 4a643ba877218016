#include "gridbank/crypto.hpp"

#include "gridbank/errors.hpp"

#include <openssl/rand.h>
#include <openssl/sha.h>

#include <memory>
#include <random>

namespace gridbank {

Hash256 sha256(std::span<const std::uint8_t> data)
{
    Hash256 out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

Hash256 sha256(std::string_view data)
{
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string hex_encode(std::span<const std::uint8_t> data)
{
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out += digits[b >> 4];
        out += digits[b & 0xF];
    }
    return out;
}

namespace {
constexpr char k_b64_alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c)
{
    if (c >= 'A' && c <= 'Z')
        return c - 'A';
    if (c >= 'a' && c <= 'z')
        return c - 'a' + 26;
    if (c >= '0' && c <= '9')
        return c - '0' + 52;
    if (c == '+')
        return 62;
    if (c == '/')
        return 63;
    return -1;
}
} // namespace

std::string base64_encode(std::span<const std::uint8_t> data)
{
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += k_b64_alphabet[(v >> 18) & 0x3F];
        out += k_b64_alphabet[(v >> 12) & 0x3F];
        out += k_b64_alphabet[(v >> 6) & 0x3F];
        out += k_b64_alphabet[v & 0x3F];
    }
    std::size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t v = data[i] << 16;
        out += k_b64_alphabet[(v >> 18) & 0x3F];
        out += k_b64_alphabet[(v >> 12) & 0x3F];
        out += "==";
    } else if (rest == 2) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out += k_b64_alphabet[(v >> 18) & 0x3F];
        out += k_b64_alphabet[(v >> 12) & 0x3F];
        out += k_b64_alphabet[(v >> 6) & 0x3F];
        out += '=';
    }
    return out;
}

Bytes base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0)
        fail(Errc::BadMessage, "base64 length not a multiple of 4");
    Bytes out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (int j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2)
                    fail(Errc::BadMessage, "bad base64 padding");
                ++pad;
                v <<= 6;
                continue;
            }
            if (pad != 0)
                fail(Errc::BadMessage, "bad base64 padding");
            int d = b64_value(c);
            if (d < 0)
                fail(Errc::BadMessage, "bad base64 character");
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        if (pad < 2)
            out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        if (pad < 1)
            out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    return out;
}

RandomSource os_random()
{
    return [](std::span<std::uint8_t> out) {
        if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
            fail(Errc::IoError, "entropy source failure");
    };
}

RandomSource seeded_random(std::uint64_t seed)
{
    auto engine = std::make_shared<std::mt19937_64>(seed);
    return [engine](std::span<std::uint8_t> out) {
        for (auto& b : out)
            b = static_cast<std::uint8_t>((*engine)() & 0xFF);
    };
}

} // namespace gridbank
