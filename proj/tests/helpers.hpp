#pragma once
#ifndef TNN_TESTS_HELPERS_HPP
#define TNN_TESTS_HELPERS_HPP

#include <tnn/tnn.hpp>

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnn_test {

inline tnn::Dataset line_dataset(std::vector<double> values) {
    return tnn::Dataset::dense_vectors(1, std::move(values));
}

inline tnn::Dataset random_vector_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    return tnn::generate_synthetic(tnn::SyntheticKind::UniformCube, n, dim, seed);
}

inline tnn::Dataset random_categorical_dataset(std::size_t n, std::size_t arity,
                                               std::size_t alphabet, std::uint64_t seed) {
    tnn::SplitMix64 g(tnn::derive_stream(seed, 0xca7u));
    std::vector<std::string> tokens;
    tokens.reserve(n * arity);
    for (std::size_t i = 0; i < n * arity; ++i)
        tokens.push_back("t" + std::to_string(g.below(alphabet)));
    return tnn::Dataset::categorical(arity, std::move(tokens));
}

/// Random connected weighted graph: a random spanning tree plus extra edges.
inline tnn::Dataset random_graph_dataset(std::size_t n, std::size_t extra_edges,
                                         std::uint64_t seed) {
    tnn::SplitMix64 g(tnn::derive_stream(seed, 0x96afu));
    std::vector<std::uint64_t> us, vs;
    std::vector<double> ws;
    for (std::size_t v = 1; v < n; ++v) {
        us.push_back(g.below(v));
        vs.push_back(v);
        ws.push_back(0.5 + g.unit());
    }
    for (std::size_t e = 0; e < extra_edges && n >= 2; ++e) {
        const auto [a, b] = tnn::draw_distinct_pair(g, n);
        us.push_back(a);
        vs.push_back(b);
        ws.push_back(0.5 + g.unit());
    }
    if (n == 1) {
        us.push_back(0);
        vs.push_back(0);
        ws.push_back(1.0);
    }
    auto graph = std::make_shared<const tnn::WeightedGraph>(us, vs, ws);
    std::vector<std::uint32_t> lcc = graph->largest_component();
    return tnn::Dataset::graph_points(std::move(graph), std::move(lcc));
}

/// Thrown when construction or search reads a distance outside the oracle.
struct PurityViolation : std::logic_error {
    PurityViolation() : std::logic_error("raw distance read outside the triplet oracle") {}
};

/// Metric wrapper whose raw-distance path is disabled: any evaluation made
/// outside an oracle call aborts the test.
class GuardedMetric {
public:
    explicit GuardedMetric(const tnn::MetricEvaluator& inner) : inner_(&inner) {}

    double between(tnn::PointId a, tnn::PointId b) const {
        if (!tnn::in_oracle_scope()) throw PurityViolation{};
        return inner_->between(a, b);
    }
    double to_query(const tnn::Query& q, tnn::PointId b) const {
        if (!tnn::in_oracle_scope()) throw PurityViolation{};
        return inner_->to_query(q, b);
    }
    bool same_payload(tnn::PointId a, tnn::PointId b) const {
        if (!tnn::in_oracle_scope()) throw PurityViolation{};
        return inner_->same_payload(a, b);
    }

private:
    const tnn::MetricEvaluator* inner_;
};

using GuardedOracle = tnn::BasicTripletOracle<GuardedMetric>;

/// Independent tally wrapped around any oracle; also poisons the raw-distance
/// path so a regression that reaches for distances trips the test.
template <class Inner>
class TallyOracle {
public:
    explicit TallyOracle(Inner& inner) : inner_(&inner) {}

    tnn::Closer triplet(tnn::PointId x, tnn::PointId y, tnn::PointId z) {
        ++triplets;
        return inner_->triplet(x, y, z);
    }
    tnn::Closer triplet(const tnn::Query& x, tnn::PointId y, tnn::PointId z) {
        ++triplets;
        return inner_->triplet(x, y, z);
    }
    bool same_point(tnn::PointId a, tnn::PointId b) {
        ++probes;
        return inner_->same_point(a, b);
    }
    double between(tnn::PointId, tnn::PointId) const { throw PurityViolation{}; }

    std::uint64_t triplets = 0;
    std::uint64_t probes = 0;

private:
    Inner* inner_;
};

/// Independent expansion-rate oracle: dense sweep over `radii_count` uniform
/// radii in (0, max distance]. Lower-bounds the breakpoint method and agrees
/// with it up to the sweep's discretization.
template <class Metric>
double dense_sweep_expansion(std::size_t n, const Metric& metric, tnn::PointId x,
                             std::size_t radii_count) {
    std::vector<double> dists;
    dists.reserve(n);
    for (tnn::PointId p = 0; p < n; ++p) dists.push_back(metric.between(x, p));
    std::sort(dists.begin(), dists.end());
    const double max_d = dists.back();
    if (max_d <= 0.0) return 1.0;
    double best = 1.0;
    for (std::size_t k = 1; k <= radii_count; ++k) {
        const double r = max_d * static_cast<double>(k) / static_cast<double>(radii_count);
        const auto inner = std::upper_bound(dists.begin(), dists.end(), r) - dists.begin();
        const auto outer = std::upper_bound(dists.begin(), dists.end(), 2.0 * r) - dists.begin();
        best = std::max(best, static_cast<double>(outer) / static_cast<double>(inner));
    }
    return best;
}

/// Metric wrapper multiplying every distance by a positive constant; order
/// and tie structure are preserved exactly, so expansion profiles must match
/// bitwise.
class ScaledMetric {
public:
    ScaledMetric(const tnn::MetricEvaluator& inner, double scale)
        : inner_(&inner), scale_(scale) {}
    double between(tnn::PointId a, tnn::PointId b) const { return scale_ * inner_->between(a, b); }
    bool same_payload(tnn::PointId a, tnn::PointId b) const { return inner_->same_payload(a, b); }

private:
    const tnn::MetricEvaluator* inner_;
    double scale_;
};

/// Searches seeds until the root split of a comparison tree uses the wanted
/// pivot ids; pins down the spec's pivot-conditioned examples.
inline std::uint64_t find_seed_with_root_pivots(const tnn::Dataset& ds, std::uint32_t n0,
                                                tnn::PointId left, tnn::PointId right,
                                                std::uint64_t max_tries = 50000) {
    const tnn::MetricEvaluator metric(ds);
    for (std::uint64_t seed = 0; seed < max_tries; ++seed) {
        tnn::TripletOracle oracle(metric);
        const tnn::CompTree tree = tnn::build_comptree(ds, n0, seed, oracle);
        if (tree.root().left_pivot == left && tree.root().right_pivot == right) return seed;
    }
    throw std::runtime_error("no seed found for the requested root pivots");
}

inline std::vector<tnn::PointId> leaf_member_sorted(const tnn::CompTree& tree,
                                                    const tnn::CompTreeNode& node) {
    auto span = tree.members(node);
    std::vector<tnn::PointId> out(span.begin(), span.end());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace tnn_test

#endif // TNN_TESTS_HELPERS_HPP
