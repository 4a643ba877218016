#include "gridbank/estimator.hpp"

#include "gridbank/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gridbank {

namespace {

std::array<double, 5> dimensions(const ResourceDescription& d)
{
    return {static_cast<double>(d.cpu_count), static_cast<double>(d.cpu_speed_ghz.micro) / 1e6,
            static_cast<double>(d.memory_mb), static_cast<double>(d.storage_gb),
            static_cast<double>(d.bandwidth_mbps.micro) / 1e6};
}

} // namespace

Value PriceEstimate::to_value() const
{
    char dist[32];
    std::snprintf(dist, sizeof dist, "%.6f", neighbor_distance_mean);
    Value v = Value::map();
    v.set("EstimatedRate", estimated_rate.text());
    v.set("SampleCount", sample_count);
    v.set("NeighborDistanceMean", dist);
    return v;
}

PriceEstimate estimate_price(std::span<const PriceSample> history,
                             const ResourceDescription& query, std::int64_t k)
{
    if (history.empty())
        fail(Errc::NoHistory, "no settlement history to estimate from");
    if (k < 1)
        fail(Errc::BadParameters, "k must be at least 1");

    // Min-max bounds over history plus the query itself, so a query outside
    // the historical range still normalizes into [0, 1] per dimension.
    std::array<double, 5> lo = dimensions(query);
    std::array<double, 5> hi = lo;
    for (const auto& sample : history) {
        auto dims = dimensions(sample.description);
        for (std::size_t d = 0; d < dims.size(); ++d) {
            lo[d] = std::min(lo[d], dims[d]);
            hi[d] = std::max(hi[d], dims[d]);
        }
    }

    auto normalized = [&](const std::array<double, 5>& dims) {
        std::array<double, 5> out{};
        for (std::size_t d = 0; d < dims.size(); ++d)
            out[d] = hi[d] > lo[d] ? (dims[d] - lo[d]) / (hi[d] - lo[d]) : 0.0;
        return out;
    };

    std::array<double, 5> q = normalized(dimensions(query));
    struct Neighbor {
        double distance;
        std::size_t order;
        Quantity rate;
    };
    std::vector<Neighbor> neighbors;
    neighbors.reserve(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::array<double, 5> p = normalized(dimensions(history[i].description));
        double sum = 0.0;
        for (std::size_t d = 0; d < p.size(); ++d)
            sum += (p[d] - q[d]) * (p[d] - q[d]);
        neighbors.push_back({std::sqrt(sum), i, history[i].rate});
    }
    std::sort(neighbors.begin(), neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance)
            return a.distance < b.distance;
        return a.order < b.order; // older record wins the tie
    });

    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), neighbors.size());
    __int128 rate_sum = 0;
    double distance_sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) {
        rate_sum += neighbors[i].rate.micro;
        distance_sum += neighbors[i].distance;
    }

    PriceEstimate estimate;
    estimate.estimated_rate =
        Quantity::from_micro(static_cast<std::int64_t>((rate_sum + take / 2) / take));
    estimate.sample_count = static_cast<std::int64_t>(take);
    estimate.neighbor_distance_mean = distance_sum / static_cast<double>(take);
    return estimate;
}

} // namespace gridbank
