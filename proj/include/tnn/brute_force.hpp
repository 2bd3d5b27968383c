#pragma once
#ifndef TNN_BRUTE_FORCE_HPP
#define TNN_BRUTE_FORCE_HPP

#include <tnn/core.hpp>
#include <tnn/dataset.hpp>
#include <tnn/metric.hpp>

#include <optional>
#include <vector>

namespace tnn {

/// Exact nearest-neighbor answer with the full minimizer set, so evaluation
/// can treat any tied neighbor as a hit.
struct NnResult {
    PointId best = kNoPoint;
    double distance = 0.0;
    std::vector<PointId> minimizers; // ascending; best == minimizers.front()
};

/// Exhaustive scan over the dataset; ties break toward the smallest PointId.
/// In leave-one-out mode pass `exclude` to drop the query's own point.
inline NnResult brute_force_nn(const MetricEvaluator& metric, const Query& q,
                               std::optional<PointId> exclude = std::nullopt) {
    const std::vector<double> dist = metric.all_to_query(q);
    NnResult result;
    bool found = false;
    for (PointId p = 0; p < dist.size(); ++p) {
        if (exclude && *exclude == p) continue;
        if (!found || dist[p] < result.distance) {
            found = true;
            result.best = p;
            result.distance = dist[p];
            result.minimizers.assign(1, p);
        } else if (dist[p] == result.distance) {
            result.minimizers.push_back(p);
        }
    }
    if (!found) throw DataError("brute-force search over an empty candidate set");
    return result;
}

} // namespace tnn

#endif // TNN_BRUTE_FORCE_HPP
