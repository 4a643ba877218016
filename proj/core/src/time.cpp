#include "gridbank/time.hpp"

#include "gridbank/errors.hpp"

#include <cstdio>
#include <ctime>

namespace gridbank {

std::string format_timestamp(Timestamp ts)
{
    std::time_t t = static_cast<std::time_t>(ts);
    std::tm tm{};
    if (gmtime_r(&t, &tm) == nullptr)
        fail(Errc::BadParameters, "timestamp out of range");
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

Timestamp parse_timestamp(std::string_view text)
{
    std::tm tm{};
    int year, mon, day, hour, min, sec;
    char z = 0;
    std::string buf(text);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &year, &mon, &day, &hour, &min,
                    &sec, &z) != 7 ||
        z != 'Z')
        fail(Errc::BadMessage, "malformed timestamp '" + buf + "'");
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hour > 23 || min > 59 || sec > 60)
        fail(Errc::BadMessage, "timestamp fields out of range");
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    return static_cast<Timestamp>(timegm(&tm));
}

Timestamp SystemClock::now() const
{
    return static_cast<Timestamp>(std::time(nullptr));
}

} // namespace gridbank
