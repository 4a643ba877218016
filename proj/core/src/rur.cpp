#include "gridbank/rur.hpp"

#include "gridbank/errors.hpp"

namespace gridbank {

std::string_view charge_item_name(ChargeItem item)
{
    switch (item) {
    case ChargeItem::WallClockTime: return "WallClockTime";
    case ChargeItem::CpuTime: return "CPUTime";
    case ChargeItem::MainMemory: return "MainMemory";
    case ChargeItem::SecondaryStorage: return "SecondaryStorage";
    case ChargeItem::NetworkActivity: return "NetworkActivity";
    case ChargeItem::SoftwareService: return "SoftwareService";
    }
    return "CPUTime";
}

ChargeItem charge_item_from_name(std::string_view name)
{
    for (ChargeItem item : k_all_charge_items) {
        if (charge_item_name(item) == name)
            return item;
    }
    fail(Errc::BadMessage, "unknown chargeable item '" + std::string(name) + "'");
}

bool is_time_rate(ChargeItem item)
{
    return item == ChargeItem::WallClockTime || item == ChargeItem::CpuTime ||
           item == ChargeItem::SoftwareService;
}

Value DeclaredUsage::to_value() const
{
    Value v = Value::map();
    v.set("WallSeconds", wall_seconds.text());
    v.set("UserCPUSeconds", user_cpu_seconds.text());
    v.set("SysCPUSeconds", sys_cpu_seconds.text());
    v.set("MemoryMBHours", memory_mb_hours.text());
    v.set("StorageMBHours", storage_mb_hours.text());
    v.set("NetworkMBTotal", network_mb_total.text());
    return v;
}

DeclaredUsage DeclaredUsage::from_value(const Value& v)
{
    DeclaredUsage usage;
    usage.wall_seconds = Quantity::parse(v.string_at("WallSeconds"));
    usage.user_cpu_seconds = Quantity::parse(v.string_at("UserCPUSeconds"));
    usage.sys_cpu_seconds = Quantity::parse(v.string_at("SysCPUSeconds"));
    usage.memory_mb_hours = Quantity::parse(v.string_at("MemoryMBHours"));
    usage.storage_mb_hours = Quantity::parse(v.string_at("StorageMBHours"));
    usage.network_mb_total = Quantity::parse(v.string_at("NetworkMBTotal"));
    return usage;
}

RawUsage RawUsage::from_declared(const DeclaredUsage& declared, Timestamp wall_start,
                                 std::string local_job_id)
{
    if (declared.wall_seconds.negative())
        fail(Errc::NegativeUsage);
    RawUsage raw;
    raw.local_job_id = std::move(local_job_id);
    raw.wall_start = wall_start;
    raw.wall_end = wall_start + (declared.wall_seconds.micro + 500'000) / 1'000'000;
    raw.user_cpu_seconds = declared.user_cpu_seconds;
    raw.sys_cpu_seconds = declared.sys_cpu_seconds;
    raw.memory_mb_hours = declared.memory_mb_hours;
    raw.storage_mb_hours = declared.storage_mb_hours;
    raw.network_mb_total = declared.network_mb_total;
    raw.validate();
    return raw;
}

void RawUsage::validate() const
{
    if (wall_end < wall_start)
        fail(Errc::ClockSkew, "job end precedes start");
    if (user_cpu_seconds.negative() || sys_cpu_seconds.negative() || memory_mb_hours.negative() ||
        storage_mb_hours.negative() || network_mb_total.negative())
        fail(Errc::NegativeUsage);
}

Value ChargeableRates::to_value() const
{
    Value v = Value::map();
    for (const auto& [item, rate] : rates)
        v.set(std::string(charge_item_name(item)), rate.text());
    v.set("Currency", currency);
    v.set("GSPCertificateName", gsp_subject);
    v.set("ValidUntil", format_timestamp(valid_until));
    return v;
}

ChargeableRates ChargeableRates::from_value(const Value& v)
{
    ChargeableRates rates;
    rates.currency = v.string_at("Currency");
    rates.gsp_subject = v.string_at("GSPCertificateName");
    rates.valid_until = parse_timestamp(v.string_at("ValidUntil"));
    for (ChargeItem item : k_all_charge_items) {
        if (const Value* rate = v.find(charge_item_name(item))) {
            Quantity q = Quantity::parse(rate->as_string());
            if (q.negative())
                fail(Errc::BadMessage, "negative rate");
            rates.rates.emplace(item, q);
        }
    }
    return rates;
}

Value ResourceUsageRecord::to_value() const
{
    Value user = Value::map();
    user.set("HostName", user_host);
    user.set("CertificateName", user_certificate_name);

    Value job = Value::map();
    job.set("JobID", job_id);
    job.set("ApplicationName", application_name);
    job.set("StartDate", format_timestamp(start_date));
    job.set("EndDate", format_timestamp(end_date));

    Value resource = Value::map();
    resource.set("HostName", resource_host);
    resource.set("CertificateName", resource_certificate_name);
    if (!host_type.empty())
        resource.set("HostType", host_type);
    resource.set("LocalJobID", local_job_id);
    for (const auto& [item, entry] : items) {
        Value pair = Value::map();
        pair.set("Usage", entry.usage.text());
        pair.set("Rate", entry.rate.text());
        resource.set(std::string(charge_item_name(item)), std::move(pair));
    }

    Value v = Value::map();
    v.set("User", std::move(user));
    v.set("Job", std::move(job));
    v.set("Resource", std::move(resource));
    v.set("Currency", currency);
    v.set("TotalPricePerTimeUnit", total_price_per_time_unit.text());
    v.set("JobCost", job_cost.text());
    return v;
}

ResourceUsageRecord ResourceUsageRecord::from_value(const Value& v)
{
    ResourceUsageRecord rur;
    const Value& user = v.at("User");
    rur.user_host = user.string_at("HostName");
    rur.user_certificate_name = user.string_at("CertificateName");

    const Value& job = v.at("Job");
    rur.job_id = job.string_at("JobID");
    rur.application_name = job.string_at("ApplicationName");
    rur.start_date = parse_timestamp(job.string_at("StartDate"));
    rur.end_date = parse_timestamp(job.string_at("EndDate"));

    const Value& resource = v.at("Resource");
    rur.resource_host = resource.string_at("HostName");
    rur.resource_certificate_name = resource.string_at("CertificateName");
    if (const Value* host_type = resource.find("HostType"))
        rur.host_type = host_type->as_string();
    rur.local_job_id = resource.string_at("LocalJobID");
    for (ChargeItem item : k_all_charge_items) {
        if (const Value* pair = resource.find(charge_item_name(item))) {
            rur.items.emplace(item, UsageItem{Quantity::parse(pair->string_at("Usage")),
                                              Quantity::parse(pair->string_at("Rate"))});
        }
    }

    rur.currency = v.string_at("Currency");
    rur.total_price_per_time_unit = Quantity::parse(v.string_at("TotalPricePerTimeUnit"));
    rur.job_cost = Money::parse(v.string_at("JobCost"), rur.currency);
    return rur;
}

ResourceUsageRecord ResourceUsageRecord::decode(std::string_view blob)
{
    return from_value(Value::parse(blob));
}

Value ChargeBreakdown::to_value() const
{
    Value lines = Value::list();
    for (const auto& line : items) {
        Value v = Value::map();
        v.set("Item", std::string(charge_item_name(line.item)));
        v.set("Usage", line.usage.text());
        v.set("Rate", line.rate.text());
        v.set("Charge", line.charge.text());
        lines.push(std::move(v));
    }
    Value v = Value::map();
    v.set("Items", std::move(lines));
    v.set("Total", total.text());
    v.set("Currency", total.currency);
    v.set("RURDigest", rur_digest);
    return v;
}

ChargeBreakdown ChargeBreakdown::from_value(const Value& v)
{
    ChargeBreakdown breakdown;
    std::string currency = v.string_at("Currency");
    for (const auto& line : v.at("Items").as_list()) {
        breakdown.items.push_back({charge_item_from_name(line.string_at("Item")),
                                   Quantity::parse(line.string_at("Usage")),
                                   Quantity::parse(line.string_at("Rate")),
                                   Money::parse(line.string_at("Charge"), currency)});
    }
    breakdown.total = Money::parse(v.string_at("Total"), currency);
    breakdown.rur_digest = v.string_at("RURDigest");
    return breakdown;
}

ResourceUsageRecord convert_raw_usage(const RawUsage& raw, const UserMeta& user,
                                      const JobMeta& job, const ResourceMeta& resource,
                                      const ChargeableRates& rates)
{
    raw.validate();

    ResourceUsageRecord rur;
    rur.user_host = user.host;
    rur.user_certificate_name = user.certificate_name;
    rur.job_id = job.job_id;
    rur.application_name = job.application_name;
    rur.start_date = raw.wall_start;
    rur.end_date = raw.wall_end;
    rur.resource_host = resource.host;
    rur.resource_certificate_name = resource.certificate_name;
    rur.host_type = resource.host_type;
    rur.local_job_id = raw.local_job_id;
    rur.currency = rates.currency;

    Quantity wall_seconds = Quantity::from_micro((raw.wall_end - raw.wall_start) * 1'000'000);
    auto usage_of = [&](ChargeItem item) -> Quantity {
        switch (item) {
        case ChargeItem::WallClockTime: return hours_from_seconds(wall_seconds);
        case ChargeItem::CpuTime: return hours_from_seconds(raw.user_cpu_seconds);
        case ChargeItem::MainMemory: return raw.memory_mb_hours;
        case ChargeItem::SecondaryStorage: return raw.storage_mb_hours;
        case ChargeItem::NetworkActivity: return raw.network_mb_total;
        case ChargeItem::SoftwareService: return hours_from_seconds(raw.sys_cpu_seconds);
        }
        return {};
    };

    for (const auto& [item, rate] : rates.rates)
        rur.items.emplace(item, UsageItem{usage_of(item), rate});

    // Informational fields per the record schema: only pure time rates sum
    // into the per-time-unit price, and the cost is duration x that price.
    Quantity per_hour;
    for (const auto& [item, entry] : rur.items) {
        if (is_time_rate(item))
            per_hour += entry.rate;
    }
    rur.total_price_per_time_unit = per_hour;
    rur.job_cost = charge_for(hours_from_seconds(wall_seconds), per_hour, rates.currency);
    return rur;
}

ResourceUsageRecord aggregate_rurs(std::span<const ResourceUsageRecord> records,
                                   const std::string& aggregator_host)
{
    if (records.empty())
        fail(Errc::EmptyList, "nothing to aggregate");

    ResourceUsageRecord out = records.front();
    for (const auto& record : records.subspan(1)) {
        if (record.job_id != out.job_id ||
            record.user_certificate_name != out.user_certificate_name)
            fail(Errc::MixedJobs, "records span different jobs");
        if (record.currency != out.currency)
            fail(Errc::MixedRates, "records span currencies");
        if (record.items.size() != out.items.size())
            fail(Errc::MixedRates, "records disagree on chargeable items");
        for (auto& [item, entry] : out.items) {
            auto other = record.items.find(item);
            if (other == record.items.end())
                fail(Errc::MixedRates, "records disagree on chargeable items");
            if (other->second.rate != entry.rate)
                fail(Errc::MixedRates,
                     std::string(charge_item_name(item)) + " rate differs across records");
            entry.usage += other->second.usage;
        }
        out.start_date = std::min(out.start_date, record.start_date);
        out.end_date = std::max(out.end_date, record.end_date);
    }
    if (!aggregator_host.empty())
        out.resource_host = aggregator_host;

    // Usage fields stay summed (charges distribute over them); only the
    // informational duration-based cost is recomputed from the widened span.
    out.job_cost =
        charge_for(hours_from_seconds(
                       Quantity::from_micro((out.end_date - out.start_date) * 1'000'000)),
                   out.total_price_per_time_unit, out.currency);
    return out;
}

ChargeBreakdown compute_charge(const ResourceUsageRecord& rur, const ChargeableRates& rates)
{
    if (rur.currency != rates.currency)
        fail(Errc::CurrencyMismatch, rur.currency + " vs " + rates.currency);
    for (const auto& [item, rate] : rates.rates) {
        if (!rur.items.contains(item))
            fail(Errc::RateMismatch,
                 std::string(charge_item_name(item)) + " priced but not metered");
    }
    for (const auto& [item, entry] : rur.items) {
        if (!rates.rates.contains(item))
            fail(Errc::RateMismatch,
                 std::string(charge_item_name(item)) + " metered but not priced");
    }

    ChargeBreakdown breakdown;
    breakdown.total = Money::zero(rates.currency);
    for (ChargeItem item : k_all_charge_items) {
        auto entry = rur.items.find(item);
        if (entry == rur.items.end())
            continue;
        Quantity rate = rates.rates.at(item);
        Money charge = charge_for(entry->second.usage, rate, rates.currency);
        breakdown.items.push_back({item, entry->second.usage, rate, charge});
        breakdown.total += charge;
    }
    breakdown.rur_digest = hex_encode(sha256(rur.encode()));
    return breakdown;
}

} // namespace gridbank
