#pragma once
#ifndef TNN_BASELINES_HPP
#define TNN_BASELINES_HPP

#include <tnn/core.hpp>
#include <tnn/dataset.hpp>
#include <tnn/metric.hpp>
#include <tnn/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tnn {

enum class BaselineMethod : std::uint8_t { KdTree, RpTree, PaTree };

inline const char* to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::KdTree: return "kdtree";
        case BaselineMethod::RpTree: return "rptree";
        case BaselineMethod::PaTree: return "patree";
    }
    return "?";
}

/// Internal nodes split on a projection (a coordinate for KD, a unit
/// direction for RP/PA) at a threshold; projections <= threshold go left.
struct AxisSplitNode {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t axis = -1;      // coordinate index, or -1 when splitting on a direction
    std::int32_t direction = -1; // index into the tree's direction table
    double threshold = 0.0;
    std::uint32_t depth = 0;
    bool frozen = false;

    bool is_leaf() const { return left < 0; }
    std::uint32_t size() const { return end - begin; }
};

/// Euclidean space-partitioning tree shared by the KD/RP/PA baselines.
/// These consume raw coordinates freely; they are the "more information"
/// reference points and are exempt from oracle purity.
class AxisSplitTree {
public:
    AxisSplitTree(BaselineMethod method, std::size_t dim, std::uint32_t n0, std::uint64_t seed,
                  std::vector<PointId> perm, std::vector<AxisSplitNode> nodes,
                  std::vector<std::vector<double>> directions, std::uint32_t height,
                  std::uint64_t dataset_fingerprint)
        : method_(method),
          dim_(dim),
          n0_(n0),
          seed_(seed),
          perm_(std::move(perm)),
          nodes_(std::move(nodes)),
          directions_(std::move(directions)),
          height_(height),
          dataset_fingerprint_(dataset_fingerprint) {}

    BaselineMethod method() const { return method_; }
    std::size_t size() const { return perm_.size(); }
    std::size_t dim() const { return dim_; }
    std::uint32_t n0() const { return n0_; }
    std::uint64_t seed() const { return seed_; }
    std::uint32_t height() const { return height_; }
    std::uint64_t dataset_fingerprint() const { return dataset_fingerprint_; }
    const std::vector<AxisSplitNode>& nodes() const { return nodes_; }
    const std::vector<PointId>& perm() const { return perm_; }
    const std::vector<double>& direction(std::int32_t idx) const { return directions_[idx]; }
    const std::vector<std::vector<double>>& directions() const { return directions_; }

    std::span<const PointId> members(const AxisSplitNode& node) const {
        return {perm_.data() + node.begin, node.size()};
    }

    double project(const AxisSplitNode& node, const double* point) const {
        if (node.axis >= 0) return point[node.axis];
        const std::vector<double>& dir = directions_[node.direction];
        double s = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) s += dir[i] * point[i];
        return s;
    }

private:
    BaselineMethod method_;
    std::size_t dim_;
    std::uint32_t n0_;
    std::uint64_t seed_;
    std::vector<PointId> perm_;
    std::vector<AxisSplitNode> nodes_;
    std::vector<std::vector<double>> directions_;
    std::uint32_t height_;
    std::uint64_t dataset_fingerprint_;
};

namespace detail {

/// Median split with "<=" going left; odd counts put the median element
/// left. When the lower median equals the maximum projection the threshold
/// drops to the largest strictly smaller value so the right child keeps the
/// maximum and neither child is empty.
inline std::optional<double> median_threshold(std::vector<double> sorted_projs) {
    std::sort(sorted_projs.begin(), sorted_projs.end());
    const double lo = sorted_projs.front();
    const double hi = sorted_projs.back();
    if (lo == hi) return std::nullopt; // no spread along this projection
    double thr = sorted_projs[(sorted_projs.size() - 1) / 2];
    if (thr == hi) {
        auto it = std::lower_bound(sorted_projs.begin(), sorted_projs.end(), hi);
        thr = *std::prev(it);
    }
    return thr;
}

struct SplitChoice {
    std::int32_t axis = -1;
    std::vector<double> direction; // set when axis < 0
    double threshold = 0.0;
};

/// Top principal component by power iteration: 100 iterations or relative
/// eigenvalue change below 1e-9, deterministic start along the coordinate of
/// maximum variance. Returns nullopt when the node has zero variance.
inline std::optional<std::vector<double>> principal_axis(const Dataset& points,
                                                         std::span<const PointId> members) {
    const std::size_t dim = points.dim();
    const std::size_t m = members.size();
    std::vector<double> mean(dim, 0.0);
    for (PointId p : members) {
        const double* row = points.vector_at(p);
        for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    }
    for (double& v : mean) v /= static_cast<double>(m);
    std::vector<double> var(dim, 0.0);
    for (PointId p : members) {
        const double* row = points.vector_at(p);
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = row[j] - mean[j];
            var[j] += d * d;
        }
    }
    const std::size_t jmax =
        static_cast<std::size_t>(std::max_element(var.begin(), var.end()) - var.begin());
    if (var[jmax] == 0.0) return std::nullopt;

    auto matvec = [&](const std::vector<double>& v) {
        std::vector<double> w(dim, 0.0);
        for (PointId p : members) {
            const double* row = points.vector_at(p);
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += (row[j] - mean[j]) * v[j];
            for (std::size_t j = 0; j < dim; ++j) w[j] += s * (row[j] - mean[j]);
        }
        for (double& x : w) x /= static_cast<double>(m);
        return w;
    };

    std::vector<double> v(dim, 0.0);
    v[jmax] = 1.0;
    double prev = 0.0;
    for (int it = 0; it < 100; ++it) {
        std::vector<double> w = matvec(v);
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        for (std::size_t j = 0; j < dim; ++j) v[j] = w[j] / norm;
        if (it > 0 && std::abs(norm - prev) < 1e-9 * norm) break;
        prev = norm;
    }
    return v;
}

} // namespace detail

namespace detail {

template <class Rule>
AxisSplitTree build_axis_tree(const Dataset& points, BaselineMethod method, std::uint32_t n0,
                              std::uint64_t seed, Rule&& choose_split) {
    if (points.kind() != DatasetKind::DenseVector)
        throw DataError(std::string(to_string(method)) + " needs a dense-vector dataset");
    if (n0 < 1) throw ConfigError("maximum leaf size n0 must be >= 1");
    const std::size_t n = points.size();

    std::vector<PointId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<PointId>(i);
    std::vector<AxisSplitNode> nodes;
    nodes.push_back(AxisSplitNode{0, static_cast<std::uint32_t>(n), -1, -1, -1, -1, 0.0, 0, false});
    std::vector<std::vector<double>> directions;
    std::uint32_t height = 0;

    struct Pending {
        std::uint32_t node;
        std::uint64_t stream;
    };
    std::vector<Pending> stack;
    stack.push_back({0, derive_stream(seed, 0)});
    std::vector<PointId> left_buf, right_buf;

    while (!stack.empty()) {
        const Pending top = stack.back();
        stack.pop_back();
        AxisSplitNode& node = nodes[top.node];
        const std::uint32_t m = node.size();
        if (m <= n0) {
            height = std::max(height, node.depth);
            continue;
        }
        std::span<const PointId> members{perm.data() + node.begin, m};
        std::optional<detail::SplitChoice> choice = choose_split(members, top.stream);
        if (!choice) {
            node.frozen = true;
            height = std::max(height, node.depth);
            continue;
        }
        node.axis = choice->axis;
        node.threshold = choice->threshold;
        if (choice->axis < 0) {
            node.direction = static_cast<std::int32_t>(directions.size());
            directions.push_back(std::move(choice->direction));
        }
        left_buf.clear();
        right_buf.clear();
        const AxisSplitNode frozen_view = node; // project() needs stable fields
        for (PointId p : members) {
            const double proj =
                frozen_view.axis >= 0
                    ? points.vector_at(p)[frozen_view.axis]
                    : [&] {
                          const std::vector<double>& dir = directions[frozen_view.direction];
                          double s = 0.0;
                          for (std::size_t j = 0; j < points.dim(); ++j)
                              s += dir[j] * points.vector_at(p)[j];
                          return s;
                      }();
            if (proj <= frozen_view.threshold)
                left_buf.push_back(p);
            else
                right_buf.push_back(p);
        }
        const std::uint32_t mid = node.begin + static_cast<std::uint32_t>(left_buf.size());
        std::copy(left_buf.begin(), left_buf.end(), perm.begin() + node.begin);
        std::copy(right_buf.begin(), right_buf.end(), perm.begin() + mid);
        const std::uint32_t left_idx = static_cast<std::uint32_t>(nodes.size());
        const std::uint32_t right_idx = left_idx + 1;
        node.left = static_cast<std::int32_t>(left_idx);
        node.right = static_cast<std::int32_t>(right_idx);
        const std::uint32_t depth = node.depth + 1;
        const std::uint32_t begin = node.begin;
        const std::uint32_t end = node.end;
        nodes.push_back(AxisSplitNode{begin, mid, -1, -1, -1, -1, 0.0, depth, false});
        nodes.push_back(AxisSplitNode{mid, end, -1, -1, -1, -1, 0.0, depth, false});
        stack.push_back({right_idx, derive_stream(top.stream, 2)});
        stack.push_back({left_idx, derive_stream(top.stream, 1)});
    }
    return AxisSplitTree(method, points.dim(), n0, seed, std::move(perm), std::move(nodes),
                         std::move(directions), height, points.fingerprint());
}

} // namespace detail

/// KD tree: split on the coordinate of maximum spread at its median.
inline AxisSplitTree build_kdtree(const Dataset& points, std::uint32_t n0) {
    return detail::build_axis_tree(
        points, BaselineMethod::KdTree, n0, 0,
        [&](std::span<const PointId> members, std::uint64_t) -> std::optional<detail::SplitChoice> {
            const std::size_t dim = points.dim();
            std::size_t best_axis = 0;
            double best_spread = -1.0;
            for (std::size_t j = 0; j < dim; ++j) {
                double lo = points.vector_at(members[0])[j];
                double hi = lo;
                for (PointId p : members) {
                    const double v = points.vector_at(p)[j];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                if (hi - lo > best_spread) {
                    best_spread = hi - lo;
                    best_axis = j;
                }
            }
            if (best_spread <= 0.0) return std::nullopt; // all points identical
            std::vector<double> projs;
            projs.reserve(members.size());
            for (PointId p : members) projs.push_back(points.vector_at(p)[best_axis]);
            const auto thr = detail::median_threshold(std::move(projs));
            if (!thr) return std::nullopt;
            detail::SplitChoice c;
            c.axis = static_cast<std::int32_t>(best_axis);
            c.threshold = *thr;
            return c;
        });
}

/// RP tree: unit direction sampled uniformly on the sphere per node,
/// split at the median projection; seed-deterministic.
inline AxisSplitTree build_rptree(const Dataset& points, std::uint32_t n0, std::uint64_t seed) {
    return detail::build_axis_tree(
        points, BaselineMethod::RpTree, n0, seed,
        [&](std::span<const PointId> members, std::uint64_t stream) -> std::optional<detail::SplitChoice> {
            SplitMix64 g(stream);
            const std::size_t dim = points.dim();
            for (std::size_t attempt = 0; attempt < members.size(); ++attempt) {
                std::vector<double> dir = unit_sphere_direction(g, dim);
                std::vector<double> projs;
                projs.reserve(members.size());
                for (PointId p : members) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) s += dir[j] * points.vector_at(p)[j];
                    projs.push_back(s);
                }
                const auto thr = detail::median_threshold(std::move(projs));
                if (!thr) continue; // zero spread along this direction, redraw
                detail::SplitChoice c;
                c.direction = std::move(dir);
                c.threshold = *thr;
                return c;
            }
            return std::nullopt;
        });
}

/// PA tree: split along the node's top principal component at the median
/// projection.
inline AxisSplitTree build_patree(const Dataset& points, std::uint32_t n0) {
    return detail::build_axis_tree(
        points, BaselineMethod::PaTree, n0, 0,
        [&](std::span<const PointId> members, std::uint64_t) -> std::optional<detail::SplitChoice> {
            auto axis = detail::principal_axis(points, members);
            if (!axis) return std::nullopt;
            const std::size_t dim = points.dim();
            std::vector<double> projs;
            projs.reserve(members.size());
            for (PointId p : members) {
                double s = 0.0;
                for (std::size_t j = 0; j < dim; ++j) s += (*axis)[j] * points.vector_at(p)[j];
                projs.push_back(s);
            }
            const auto thr = detail::median_threshold(std::move(projs));
            if (!thr) return std::nullopt;
            detail::SplitChoice c;
            c.direction = std::move(*axis);
            c.threshold = *thr;
            return c;
        });
}

struct DefeatistReport {
    PointId neighbor = kNoPoint;
    double distance = 0.0;
    std::uint32_t leaf_depth = 0;
    std::uint32_t leaf_size = 0;
    bool used_sibling_fallback = false;
};

namespace detail {

inline PointId scan_leaf_euclidean(const Dataset& points, std::span<const PointId> members,
                                   const double* q, std::optional<PointId> exclude,
                                   double& best_dist) {
    PointId best = kNoPoint;
    for (PointId p : members) {
        if (exclude && *exclude == p) continue;
        const double d = euclidean(q, points.vector_at(p), points.dim());
        if (best == kNoPoint || d < best_dist) {
            best = p;
            best_dist = d;
        }
    }
    return best;
}

} // namespace detail

/// Greedy descent by projection versus threshold ("<=" goes left), then an
/// exhaustive Euclidean scan in the leaf; ties break toward the smallest
/// PointId. Leave-one-out exclusion that empties the leaf falls back to the
/// sibling subtree, as in the comparison tree.
inline DefeatistReport defeatist_query(const AxisSplitTree& tree, const Dataset& points,
                                       std::span<const double> q,
                                       std::optional<PointId> exclude = std::nullopt) {
    if (q.size() != tree.dim())
        throw DataError("query dimension " + std::to_string(q.size()) +
                        " does not match tree dimension " + std::to_string(tree.dim()));
    DefeatistReport report;
    auto descend = [&](std::uint32_t start) {
        std::vector<std::uint32_t> path;
        std::uint32_t at = start;
        while (true) {
            path.push_back(at);
            const AxisSplitNode& node = tree.nodes()[at];
            if (node.is_leaf()) return path;
            at = static_cast<std::uint32_t>(tree.project(node, q.data()) <= node.threshold
                                                ? node.left
                                                : node.right);
        }
    };
    std::vector<std::uint32_t> path = descend(0);
    const AxisSplitNode* leaf = &tree.nodes()[path.back()];
    double best_dist = 0.0;
    PointId best = detail::scan_leaf_euclidean(points, tree.members(*leaf), q.data(), exclude, best_dist);
    if (best == kNoPoint) {
        if (path.size() < 2) throw DataError("leave-one-out search over a single excluded point");
        const AxisSplitNode& parent = tree.nodes()[path[path.size() - 2]];
        const std::uint32_t sibling = static_cast<std::uint32_t>(
            static_cast<std::uint32_t>(parent.left) == path.back() ? parent.right : parent.left);
        path = descend(sibling);
        leaf = &tree.nodes()[path.back()];
        best = detail::scan_leaf_euclidean(points, tree.members(*leaf), q.data(), exclude, best_dist);
        report.used_sibling_fallback = true;
    }
    report.neighbor = best;
    report.distance = best_dist;
    report.leaf_depth = leaf->depth;
    report.leaf_size = leaf->size();
    return report;
}

// Serialization shares the comptree envelope with a method tag.

inline nlohmann::json axis_tree_to_json(const AxisSplitTree& tree) {
    nlohmann::json j;
    j["format"] = "tnn-tree";
    j["version"] = 1;
    j["method"] = to_string(tree.method());
    j["n"] = tree.size();
    j["dim"] = tree.dim();
    j["n0"] = tree.n0();
    j["seed"] = tree.seed();
    j["height"] = tree.height();
    j["dataset_fingerprint"] = tree.dataset_fingerprint();
    j["perm"] = tree.perm();
    nlohmann::json nodes = nlohmann::json::array();
    for (const AxisSplitNode& node : tree.nodes())
        nodes.push_back({node.begin, node.end, node.left, node.right, node.axis, node.direction,
                         node.threshold, node.depth, node.frozen ? 1 : 0});
    j["nodes"] = std::move(nodes);
    j["directions"] = tree.directions();
    return j;
}

inline AxisSplitTree axis_tree_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "tnn-tree")
        throw DataError("not a tnn-tree record");
    if (j.value("version", -1) != 1) throw DataError("unsupported tree format version");
    const std::string method_tag = j.value("method", "");
    BaselineMethod method;
    if (method_tag == "kdtree")
        method = BaselineMethod::KdTree;
    else if (method_tag == "rptree")
        method = BaselineMethod::RpTree;
    else if (method_tag == "patree")
        method = BaselineMethod::PaTree;
    else
        throw DataError("tree record is not a baseline tree (method tag '" + method_tag + "')");
    std::vector<PointId> perm = j.at("perm").get<std::vector<PointId>>();
    std::vector<AxisSplitNode> nodes;
    for (const auto& row : j.at("nodes")) {
        if (!row.is_array() || row.size() != 9) throw DataError("tree record: malformed node row");
        AxisSplitNode node;
        node.begin = row[0].get<std::uint32_t>();
        node.end = row[1].get<std::uint32_t>();
        node.left = row[2].get<std::int32_t>();
        node.right = row[3].get<std::int32_t>();
        node.axis = row[4].get<std::int32_t>();
        node.direction = row[5].get<std::int32_t>();
        node.threshold = row[6].get<double>();
        node.depth = row[7].get<std::uint32_t>();
        node.frozen = row[8].get<int>() != 0;
        nodes.push_back(node);
    }
    if (nodes.empty()) throw DataError("tree record: no nodes");
    return AxisSplitTree(method, j.at("dim").get<std::size_t>(), j.at("n0").get<std::uint32_t>(),
                         j.at("seed").get<std::uint64_t>(), std::move(perm), std::move(nodes),
                         j.at("directions").get<std::vector<std::vector<double>>>(),
                         j.at("height").get<std::uint32_t>(),
                         j.at("dataset_fingerprint").get<std::uint64_t>());
}

} // namespace tnn

#endif // TNN_BASELINES_HPP
