#include "gridbank/canonical.hpp"

#include "gridbank/errors.hpp"

#include <cctype>
#include <cstdio>

namespace gridbank {

namespace {

void encode_string(const std::string& s, std::string& out)
{
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
        case '"':
            out += "\\\"";
            break;
        case '\\':
            out += "\\\\";
            break;
        default:
            if (c < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += static_cast<char>(c);
            }
        }
    }
    out += '"';
}

void encode_value(const Value& v, std::string& out)
{
    if (v.is_int()) {
        out += std::to_string(v.as_int());
    } else if (v.is_string()) {
        encode_string(v.as_string(), out);
    } else if (v.is_list()) {
        out += '[';
        bool first = true;
        for (const auto& item : v.as_list()) {
            if (!first)
                out += ',';
            first = false;
            encode_value(item, out);
        }
        out += ']';
    } else {
        out += '{';
        bool first = true;
        for (const auto& [key, item] : v.as_map()) {
            if (!first)
                out += ',';
            first = false;
            encode_string(key, out);
            out += ':';
            encode_value(item, out);
        }
        out += '}';
    }
}

// Nesting bound: protects the stack against hostile frames, which are
// parsed before their signature can be checked.
constexpr int k_max_parse_depth = 64;

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Value run()
    {
        Value v = parse_value();
        skip_ws();
        if (pos_ != text_.size())
            fail(Errc::BadMessage, "trailing bytes after value");
        return v;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    struct DepthGuard {
        explicit DepthGuard(Parser& parser) : parser_(parser)
        {
            if (++parser_.depth_ > k_max_parse_depth)
                fail(Errc::BadMessage, "nesting too deep");
        }
        ~DepthGuard() { --parser_.depth_; }
        Parser& parser_;
    };

    [[noreturn]] void error(const std::string& what)
    {
        fail(Errc::BadMessage, what + " at offset " + std::to_string(pos_));
    }

    void skip_ws()
    {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                text_[pos_] == '\r'))
            ++pos_;
    }

    char peek()
    {
        if (pos_ >= text_.size())
            error("unexpected end of input");
        return text_[pos_];
    }

    char take()
    {
        char c = peek();
        ++pos_;
        return c;
    }

    void expect(char c)
    {
        if (take() != c)
            error(std::string("expected '") + c + "'");
    }

    Value parse_value()
    {
        skip_ws();
        char c = peek();
        if (c == '{')
            return parse_map();
        if (c == '[')
            return parse_list();
        if (c == '"')
            return Value(parse_string());
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c)))
            return parse_int();
        error("unexpected character");
    }

    Value parse_map()
    {
        DepthGuard guard(*this);
        expect('{');
        Value::Map m;
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return Value(std::move(m));
        }
        while (true) {
            skip_ws();
            std::string key = parse_string();
            skip_ws();
            expect(':');
            Value v = parse_value();
            if (!m.emplace(std::move(key), std::move(v)).second)
                error("duplicate key");
            skip_ws();
            char c = take();
            if (c == '}')
                return Value(std::move(m));
            if (c != ',')
                error("expected ',' or '}'");
        }
    }

    Value parse_list()
    {
        DepthGuard guard(*this);
        expect('[');
        Value::List l;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return Value(std::move(l));
        }
        while (true) {
            l.push_back(parse_value());
            skip_ws();
            char c = take();
            if (c == ']')
                return Value(std::move(l));
            if (c != ',')
                error("expected ',' or ']'");
        }
    }

    Value parse_int()
    {
        std::size_t start = pos_;
        if (peek() == '-')
            ++pos_;
        if (!std::isdigit(static_cast<unsigned char>(peek())))
            error("malformed integer");
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            error("fractional numbers are not representable; use decimal strings");
        std::string token(text_.substr(start, pos_ - start));
        errno = 0;
        char* end = nullptr;
        long long v = std::strtoll(token.c_str(), &end, 10);
        if (errno != 0 || end != token.c_str() + token.size())
            error("integer out of range");
        return Value(static_cast<std::int64_t>(v));
    }

    unsigned hex_quad()
    {
        unsigned v = 0;
        for (int i = 0; i < 4; ++i) {
            char c = take();
            v <<= 4;
            if (c >= '0' && c <= '9')
                v |= static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f')
                v |= static_cast<unsigned>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F')
                v |= static_cast<unsigned>(c - 'A' + 10);
            else
                error("bad \\u escape");
        }
        return v;
    }

    std::string parse_string()
    {
        expect('"');
        std::string out;
        while (true) {
            if (pos_ >= text_.size())
                error("unterminated string");
            char c = text_[pos_++];
            if (c == '"')
                return out;
            if (c == '\\') {
                char e = take();
                switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case '/': out += '/'; break;
                case 'b': out += '\b'; break;
                case 'f': out += '\f'; break;
                case 'n': out += '\n'; break;
                case 'r': out += '\r'; break;
                case 't': out += '\t'; break;
                case 'u': {
                    unsigned cp = hex_quad();
                    if (cp >= 0xD800 && cp <= 0xDFFF)
                        error("surrogate escapes unsupported");
                    if (cp < 0x80) {
                        out += static_cast<char>(cp);
                    } else if (cp < 0x800) {
                        out += static_cast<char>(0xC0 | (cp >> 6));
                        out += static_cast<char>(0x80 | (cp & 0x3F));
                    } else {
                        out += static_cast<char>(0xE0 | (cp >> 12));
                        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                        out += static_cast<char>(0x80 | (cp & 0x3F));
                    }
                    break;
                }
                default:
                    error("unknown escape");
                }
            } else if (static_cast<unsigned char>(c) < 0x20) {
                error("raw control character in string");
            } else {
                out += c;
            }
        }
    }
};

} // namespace

std::int64_t Value::as_int() const
{
    if (!is_int())
        fail(Errc::BadMessage, "expected integer value");
    return std::get<std::int64_t>(v_);
}

const std::string& Value::as_string() const
{
    if (!is_string())
        fail(Errc::BadMessage, "expected string value");
    return std::get<std::string>(v_);
}

const Value::List& Value::as_list() const
{
    if (!is_list())
        fail(Errc::BadMessage, "expected list value");
    return std::get<List>(v_);
}

const Value::Map& Value::as_map() const
{
    if (!is_map())
        fail(Errc::BadMessage, "expected map value");
    return std::get<Map>(v_);
}

Value::List& Value::mutable_list()
{
    if (!is_list())
        fail(Errc::BadMessage, "expected list value");
    return std::get<List>(v_);
}

Value::Map& Value::mutable_map()
{
    if (!is_map())
        fail(Errc::BadMessage, "expected map value");
    return std::get<Map>(v_);
}

bool Value::has(std::string_view key) const
{
    return find(key) != nullptr;
}

const Value* Value::find(std::string_view key) const
{
    if (!is_map())
        return nullptr;
    const auto& m = std::get<Map>(v_);
    auto it = m.find(std::string(key));
    return it == m.end() ? nullptr : &it->second;
}

const Value& Value::at(std::string_view key) const
{
    const Value* v = find(key);
    if (v == nullptr)
        fail(Errc::BadMessage, "missing field '" + std::string(key) + "'");
    return *v;
}

Value& Value::set(std::string key, Value v)
{
    mutable_map().insert_or_assign(std::move(key), std::move(v));
    return *this;
}

Value& Value::push(Value v)
{
    mutable_list().push_back(std::move(v));
    return *this;
}

std::string Value::encode() const
{
    std::string out;
    encode_value(*this, out);
    return out;
}

Value Value::parse(std::string_view text)
{
    return Parser(text).run();
}

} // namespace gridbank
