#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gridbank {

/// Value tree for every record this system signs, journals, or puts on the
/// wire: maps, lists, UTF-8 strings and 64-bit integers. The canonical
/// encoding is deterministic (keys in byte-lexicographic order, no
/// insignificant whitespace, one escape form per character), so equal trees
/// always produce identical bytes. Fractional amounts travel as fixed-point
/// decimal strings, never as floats.
class Value {
public:
    using List = std::vector<Value>;
    using Map = std::map<std::string, Value>; // sorted keys by construction

    Value() : v_(std::int64_t{0}) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(unsigned u) : v_(static_cast<std::int64_t>(u)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(std::string_view s) : v_(std::string(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(List l) : v_(std::move(l)) {}
    Value(Map m) : v_(std::move(m)) {}

    static Value list() { return Value(List{}); }
    static Value map() { return Value(Map{}); }

    bool is_int() const noexcept { return std::holds_alternative<std::int64_t>(v_); }
    bool is_string() const noexcept { return std::holds_alternative<std::string>(v_); }
    bool is_list() const noexcept { return std::holds_alternative<List>(v_); }
    bool is_map() const noexcept { return std::holds_alternative<Map>(v_); }

    // Typed accessors throw BadMessage on a kind mismatch.
    std::int64_t as_int() const;
    const std::string& as_string() const;
    const List& as_list() const;
    const Map& as_map() const;
    List& mutable_list();
    Map& mutable_map();

    // Map conveniences.
    bool has(std::string_view key) const;
    const Value* find(std::string_view key) const;
    const Value& at(std::string_view key) const; // throws BadMessage when absent
    Value& set(std::string key, Value v);        // returns *this for chaining
    std::int64_t int_at(std::string_view key) const { return at(key).as_int(); }
    const std::string& string_at(std::string_view key) const { return at(key).as_string(); }

    // List convenience.
    Value& push(Value v);

    /// Canonical byte encoding; the result is the exact signing payload.
    std::string encode() const;

    /// Inverse of encode(). Tolerates ASCII whitespace between tokens so the
    /// same grammar serves hand-written config and scenario files. Floats,
    /// booleans, null and duplicate keys are rejected.
    static Value parse(std::string_view text);

    bool operator==(const Value& other) const { return v_ == other.v_; }

private:
    std::variant<std::int64_t, std::string, List, Map> v_;
};

} // namespace gridbank
