#pragma once
#ifndef TNN_METRIC_HPP
#define TNN_METRIC_HPP

#include <tnn/core.hpp>
#include <tnn/dataset.hpp>

#include <cmath>
#include <limits>
#include <mutex>
#include <queue>
#include <unordered_map>
#include <vector>

namespace tnn {

namespace detail {

inline double euclidean(const double* a, const double* b, std::size_t dim) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double mismatch(const std::string* a, const std::string* b, std::size_t arity) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < arity; ++i)
        if (a[i] != b[i]) ++diff;
    return static_cast<double>(diff);
}

/// Single-source shortest paths; unreachable nodes get +inf.
inline std::vector<double> dijkstra(const WeightedGraph& g, std::uint32_t source) {
    std::vector<double> dist(g.num_nodes(), std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (std::size_t e = g.degree_begin(u); e < g.degree_end(u); ++e) {
            const std::uint32_t v = g.edge_target(e);
            const double nd = d + g.edge_weight(e);
            if (nd < dist[v]) {
                dist[v] = nd;
                heap.emplace(nd, v);
            }
        }
    }
    return dist;
}

} // namespace detail

/// Kind-matched distance rule over a Dataset: Euclidean for dense vectors,
/// mismatch count for categorical tuples, shortest-path length for graph
/// nodes. Immutable and safe for concurrent reads; graph distances are
/// computed per source by Dijkstra and memoized for graphs below
/// `graph_cache_limit` nodes.
class MetricEvaluator {
public:
    explicit MetricEvaluator(const Dataset& ds, std::size_t graph_cache_limit = 20000)
        : ds_(&ds), cache_enabled_(false) {
        if (ds.kind() == DatasetKind::GraphNode)
            cache_enabled_ = ds.graph().num_nodes() <= graph_cache_limit;
    }

    const Dataset& dataset() const { return *ds_; }

    double between(PointId a, PointId b) const {
        check_id(a);
        check_id(b);
        switch (ds_->kind()) {
            case DatasetKind::DenseVector:
                return detail::euclidean(ds_->vector_at(a), ds_->vector_at(b), ds_->dim());
            case DatasetKind::CategoricalTuple:
                return detail::mismatch(ds_->tokens_at(a), ds_->tokens_at(b), ds_->arity());
            case DatasetKind::GraphNode:
                return node_distance(ds_->node_at(a), ds_->node_at(b));
        }
        throw DataError("corrupt dataset kind");
    }

    double to_query(const Query& q, PointId b) const {
        check_id(b);
        if (q.is_member()) return between(q.member_id(), b);
        switch (ds_->kind()) {
            case DatasetKind::DenseVector: {
                const auto* v = q.vector_payload();
                if (!v) throw DataError("query payload does not match dense-vector dataset");
                if (v->size() != ds_->dim())
                    throw DataError("query arity " + std::to_string(v->size()) +
                                    " does not match dataset dim " + std::to_string(ds_->dim()));
                return detail::euclidean(v->data(), ds_->vector_at(b), ds_->dim());
            }
            case DatasetKind::CategoricalTuple: {
                const auto* t = q.categorical_payload();
                if (!t) throw DataError("query payload does not match categorical dataset");
                if (t->size() != ds_->arity())
                    throw DataError("query arity " + std::to_string(t->size()) +
                                    " does not match dataset arity " + std::to_string(ds_->arity()));
                return detail::mismatch(t->data(), ds_->tokens_at(b), ds_->arity());
            }
            case DatasetKind::GraphNode: {
                const auto* name = q.graph_payload();
                if (!name) throw DataError("query payload does not match graph dataset");
                return node_distance(ds_->graph().node_of_name(*name), ds_->node_at(b));
            }
        }
        throw DataError("corrupt dataset kind");
    }

    /// Identity probe: true iff the two stored payloads are equal, which for
    /// all three metric kinds is equivalent to distance zero. Reads no
    /// distance value.
    bool same_payload(PointId a, PointId b) const {
        check_id(a);
        check_id(b);
        if (a == b) return true;
        switch (ds_->kind()) {
            case DatasetKind::DenseVector: {
                const double* x = ds_->vector_at(a);
                const double* y = ds_->vector_at(b);
                for (std::size_t i = 0; i < ds_->dim(); ++i)
                    if (x[i] != y[i]) return false;
                return true;
            }
            case DatasetKind::CategoricalTuple: {
                const std::string* x = ds_->tokens_at(a);
                const std::string* y = ds_->tokens_at(b);
                for (std::size_t i = 0; i < ds_->arity(); ++i)
                    if (x[i] != y[i]) return false;
                return true;
            }
            case DatasetKind::GraphNode:
                return ds_->node_at(a) == ds_->node_at(b);
        }
        throw DataError("corrupt dataset kind");
    }

    /// All distances from a query to the dataset, in point-id order. For graph
    /// metrics this costs one Dijkstra instead of n.
    std::vector<double> all_to_query(const Query& q) const {
        std::vector<double> out(ds_->size());
        if (ds_->kind() == DatasetKind::GraphNode) {
            const std::uint32_t source = q.is_member() ? ds_->node_at(q.member_id())
                                                       : ds_->graph().node_of_name(*q.graph_payload());
            if (cache_enabled_) {
                const std::vector<double>& dist = cached_source(source);
                for (PointId p = 0; p < ds_->size(); ++p) out[p] = dist[ds_->node_at(p)];
            } else {
                const std::vector<double> dist = detail::dijkstra(ds_->graph(), source);
                for (PointId p = 0; p < ds_->size(); ++p) out[p] = dist[ds_->node_at(p)];
            }
            return out;
        }
        for (PointId p = 0; p < ds_->size(); ++p) out[p] = to_query(q, p);
        return out;
    }

private:
    void check_id(PointId p) const {
        if (p >= ds_->size())
            throw DataError("point id " + std::to_string(p) + " out of range (n=" +
                            std::to_string(ds_->size()) + ")");
    }

    double node_distance(std::uint32_t a, std::uint32_t b) const {
        if (a == b) return 0.0;
        double d;
        if (cache_enabled_) {
            d = cached_source(a)[b];
        } else {
            d = detail::dijkstra(ds_->graph(), a)[b];
        }
        if (!std::isfinite(d))
            throw DataError("graph nodes " + std::to_string(ds_->graph().node_name(a)) + " and " +
                            std::to_string(ds_->graph().node_name(b)) + " are disconnected");
        return d;
    }

    // Elements of an unordered_map are reference-stable, so the returned
    // reference outlives later insertions; the lock only guards the lookup.
    const std::vector<double>& cached_source(std::uint32_t source) const {
        {
            std::lock_guard<std::mutex> lock(cache_mutex_);
            auto it = cache_.find(source);
            if (it != cache_.end()) return it->second;
        }
        std::vector<double> dist = detail::dijkstra(ds_->graph(), source);
        std::lock_guard<std::mutex> lock(cache_mutex_);
        return cache_.emplace(source, std::move(dist)).first->second;
    }

    const Dataset* ds_;
    bool cache_enabled_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::uint32_t, std::vector<double>> cache_;
};

} // namespace tnn

#endif // TNN_METRIC_HPP
