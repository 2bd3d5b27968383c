#pragma once
#ifndef TNN_ORACLE_HPP
#define TNN_ORACLE_HPP

#include <tnn/core.hpp>
#include <tnn/dataset.hpp>
#include <tnn/metric.hpp>

#include <atomic>
#include <cstdint>

namespace tnn {

namespace detail {
inline thread_local int oracle_scope_depth = 0;
}

/// RAII marker set while a triplet oracle evaluates its metric. Lets tests
/// run against a metric that aborts on any distance read made outside an
/// oracle call, proving that construction and search stay comparison-only.
class OracleScope {
public:
    OracleScope() { ++detail::oracle_scope_depth; }
    ~OracleScope() { --detail::oracle_scope_depth; }
    OracleScope(const OracleScope&) = delete;
    OracleScope& operator=(const OracleScope&) = delete;
};

inline bool in_oracle_scope() { return detail::oracle_scope_depth > 0; }

/// The sole gateway from construction/search code to the metric. Answers
/// "is d(x,y) <= d(x,z)?" and counts every answered query; ties answer ToY.
/// Counting is atomic, so the final counter equals the total number of calls
/// under concurrent use.
///
/// `same_point` is a separate identity probe (distance-zero test by payload
/// equality) used only to reject duplicate pivots; it reads no distances and
/// is tallied on its own counter so triplet budgets stay exact.
template <class Metric>
class BasicTripletOracle {
public:
    explicit BasicTripletOracle(const Metric& metric) : metric_(&metric) {}

    Closer triplet(PointId x, PointId y, PointId z) {
        comparisons_.fetch_add(1, std::memory_order_relaxed);
        OracleScope scope;
        return metric_->between(x, y) <= metric_->between(x, z) ? Closer::ToY : Closer::ToZ;
    }

    Closer triplet(const Query& x, PointId y, PointId z) {
        comparisons_.fetch_add(1, std::memory_order_relaxed);
        OracleScope scope;
        return metric_->to_query(x, y) <= metric_->to_query(x, z) ? Closer::ToY : Closer::ToZ;
    }

    bool same_point(PointId a, PointId b) {
        duplicate_probes_.fetch_add(1, std::memory_order_relaxed);
        OracleScope scope;
        return metric_->same_payload(a, b);
    }

    std::uint64_t comparisons() const { return comparisons_.load(std::memory_order_relaxed); }
    std::uint64_t duplicate_probes() const {
        return duplicate_probes_.load(std::memory_order_relaxed);
    }

    void reset_counters() {
        comparisons_.store(0, std::memory_order_relaxed);
        duplicate_probes_.store(0, std::memory_order_relaxed);
    }

    const Metric& metric() const { return *metric_; }

private:
    const Metric* metric_;
    std::atomic<std::uint64_t> comparisons_{0};
    std::atomic<std::uint64_t> duplicate_probes_{0};
};

using TripletOracle = BasicTripletOracle<MetricEvaluator>;

} // namespace tnn

#endif // TNN_ORACLE_HPP
