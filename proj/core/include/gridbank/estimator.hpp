#pragma once

#include "gridbank/instruments.hpp"
#include "gridbank/money.hpp"

#include <span>

namespace gridbank {

struct PriceEstimate {
    Quantity estimated_rate; // G$ per CPU hour
    std::int64_t sample_count = 0;
    double neighbor_distance_mean = 0.0;

    Value to_value() const;
};

/// k-nearest-neighbour market estimate over settlement history. Similarity
/// is Euclidean distance over min-max-normalized hardware dimensions; the
/// estimate is the mean effective rate of the k nearest samples, ties broken
/// by older-first record order.
PriceEstimate estimate_price(std::span<const PriceSample> history,
                             const ResourceDescription& query, std::int64_t k);

} // namespace gridbank
