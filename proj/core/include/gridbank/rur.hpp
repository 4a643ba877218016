#pragma once

#include "gridbank/canonical.hpp"
#include "gridbank/crypto.hpp"
#include "gridbank/identity.hpp"
#include "gridbank/money.hpp"
#include "gridbank/time.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridbank {

/// Chargeable item vocabulary. Rates and usage records carry per-item
/// entries keyed by these names; a rates record and a usage record must
/// conform item-for-item before a charge can be computed.
enum class ChargeItem {
    WallClockTime,     // hours @ G$/hour
    CpuTime,           // CPU hours @ G$/CPU-hour
    MainMemory,        // MB-hours @ G$/MB-hour
    SecondaryStorage,  // MB-hours @ G$/MB-hour
    NetworkActivity,   // MB @ G$/MB
    SoftwareService,   // system CPU hours @ G$/hour
};

constexpr ChargeItem k_all_charge_items[] = {
    ChargeItem::WallClockTime,  ChargeItem::CpuTime,         ChargeItem::MainMemory,
    ChargeItem::SecondaryStorage, ChargeItem::NetworkActivity, ChargeItem::SoftwareService,
};

std::string_view charge_item_name(ChargeItem item);
ChargeItem charge_item_from_name(std::string_view name);

/// True for items whose rate is a pure per-hour price; only these feed the
/// informational TotalPricePerTimeUnit / JobCost fields.
bool is_time_rate(ChargeItem item);

/// Usage figures as durations/volumes, before they are anchored to wall
/// time. This is what job submissions and agents declare on the wire.
struct DeclaredUsage {
    Quantity wall_seconds;
    Quantity user_cpu_seconds;
    Quantity sys_cpu_seconds;
    Quantity memory_mb_hours;
    Quantity storage_mb_hours;
    Quantity network_mb_total;

    Value to_value() const;
    static DeclaredUsage from_value(const Value& v);
};

/// Raw usage as captured by the resource meter, before conversion into an
/// OS-independent record. Local job id is kept to settle disputes.
struct RawUsage {
    std::string local_job_id;
    Timestamp wall_start = 0;
    Timestamp wall_end = 0;
    Quantity user_cpu_seconds;
    Quantity sys_cpu_seconds;
    Quantity memory_mb_hours;
    Quantity storage_mb_hours;
    Quantity network_mb_total;

    void validate() const; // NegativeUsage / ClockSkew

    static RawUsage from_declared(const DeclaredUsage& declared, Timestamp wall_start,
                                  std::string local_job_id);
};

/// Signed per-item price list published by a provider's trade service.
struct ChargeableRates {
    std::map<ChargeItem, Quantity> rates; // G$ per item unit
    std::string currency = "G$";
    std::string gsp_subject;
    Timestamp valid_until = 0;

    Value to_value() const;
    static ChargeableRates from_value(const Value& v);
    bool expired(Timestamp now) const { return now >= valid_until; }
};

struct UsageItem {
    Quantity usage;
    Quantity rate;
};

/// OS-independent Resource Usage Record. The canonical encoding of this
/// record is the opaque blob the bank stores with each transfer.
struct ResourceUsageRecord {
    std::string user_host;
    std::string user_certificate_name;
    std::string job_id;
    std::string application_name;
    Timestamp start_date = 0;
    Timestamp end_date = 0;
    std::string resource_host;
    std::string resource_certificate_name;
    std::string host_type; // optional
    std::string local_job_id;
    std::map<ChargeItem, UsageItem> items;
    std::string currency = "G$";
    Quantity total_price_per_time_unit;
    Money job_cost;

    Value to_value() const;
    static ResourceUsageRecord from_value(const Value& v);
    std::string encode() const { return to_value().encode(); }
    static ResourceUsageRecord decode(std::string_view blob);
};

struct ChargeLine {
    ChargeItem item;
    Quantity usage;
    Quantity rate;
    Money charge;
};

struct ChargeBreakdown {
    std::vector<ChargeLine> items; // in k_all_charge_items order
    Money total;
    std::string rur_digest; // sha256 hex of the canonical RUR bytes

    Value to_value() const;
    static ChargeBreakdown from_value(const Value& v);
};

struct UserMeta {
    std::string host;
    std::string certificate_name;
};

struct JobMeta {
    std::string job_id;
    std::string application_name;
};

struct ResourceMeta {
    std::string host;
    std::string certificate_name;
    std::string host_type; // optional
};

/// Builds the OS-independent record: units converted (seconds to hours),
/// rates copied in per item, informational per-time-unit totals populated.
ResourceUsageRecord convert_raw_usage(const RawUsage& raw, const UserMeta& user,
                                      const JobMeta& job, const ResourceMeta& resource,
                                      const ChargeableRates& rates);

/// Combines per-resource records for one job into a single record: usage
/// summed item-wise, the time span widened, rates carried through (they must
/// be identical across inputs). The aggregating meter's host replaces the
/// per-resource host; empty keeps the first record's host.
ResourceUsageRecord aggregate_rurs(std::span<const ResourceUsageRecord> records,
                                   const std::string& aggregator_host = {});

/// rate x usage per item, each rounded half-up to milli units, then summed
/// exactly.
ChargeBreakdown compute_charge(const ResourceUsageRecord& rur, const ChargeableRates& rates);

} // namespace gridbank
