#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>

namespace gridbank {

/// UTC seconds since the Unix epoch. Ledger timestamps have second precision.
using Timestamp = std::int64_t;

std::string format_timestamp(Timestamp ts);          // "2002-08-23T10:30:00Z"
Timestamp parse_timestamp(std::string_view text);    // throws BadMessage

struct Clock {
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

/// Injectable clock for tests and the scenario harness.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = 0) : now_(start) {}
    Timestamp now() const override { return now_.load(); }
    void set(Timestamp ts) { now_.store(ts); }
    void advance(std::int64_t seconds) { now_.fetch_add(seconds); }

private:
    std::atomic<Timestamp> now_;
};

} // namespace gridbank
