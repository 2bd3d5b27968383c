#pragma once
#ifndef TNN_COMPTREE_HPP
#define TNN_COMPTREE_HPP

#include <tnn/core.hpp>
#include <tnn/dataset.hpp>
#include <tnn/oracle.hpp>
#include <tnn/rng.hpp>

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tnn {

/// One node of a comparison tree. Members are a contiguous range of the
/// tree's permuted id array; a node is a leaf iff it has no children iff it
/// has no pivots.
struct CompTreeNode {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    PointId left_pivot = kNoPoint;
    PointId right_pivot = kNoPoint;
    std::uint32_t depth = 0;
    bool frozen = false; // oversized leaf whose members are pairwise at distance 0

    bool is_leaf() const { return left < 0; }
    std::uint32_t size() const { return end - begin; }
};

/// Binary tree of index sets with two pivots per internal node; immutable
/// after construction. Every leaf has at most n0 members unless frozen.
class CompTree {
public:
    CompTree(std::uint32_t n0, std::uint64_t seed, std::vector<PointId> perm,
             std::vector<CompTreeNode> nodes, std::uint32_t height, std::uint64_t build_triplets,
             std::uint64_t duplicate_probes, std::uint64_t dataset_fingerprint)
        : n0_(n0),
          seed_(seed),
          perm_(std::move(perm)),
          nodes_(std::move(nodes)),
          height_(height),
          build_triplets_(build_triplets),
          duplicate_probes_(duplicate_probes),
          dataset_fingerprint_(dataset_fingerprint) {}

    std::size_t size() const { return perm_.size(); }
    std::uint32_t n0() const { return n0_; }
    std::uint64_t seed() const { return seed_; }
    std::uint32_t height() const { return height_; }
    std::uint64_t build_triplets() const { return build_triplets_; }
    std::uint64_t duplicate_probes() const { return duplicate_probes_; }
    std::uint64_t dataset_fingerprint() const { return dataset_fingerprint_; }

    const std::vector<CompTreeNode>& nodes() const { return nodes_; }
    const CompTreeNode& root() const { return nodes_.front(); }
    const std::vector<PointId>& perm() const { return perm_; }

    std::span<const PointId> members(const CompTreeNode& node) const {
        return {perm_.data() + node.begin, node.size()};
    }

private:
    std::uint32_t n0_;
    std::uint64_t seed_;
    std::vector<PointId> perm_;
    std::vector<CompTreeNode> nodes_;
    std::uint32_t height_;
    std::uint64_t build_triplets_;
    std::uint64_t duplicate_probes_;
    std::uint64_t dataset_fingerprint_;
};

/// Builds a comparison tree over n points using only the triplet oracle.
///
/// Any node larger than n0 samples two distinct pivots uniformly without
/// replacement from its members; every other member goes left iff it is at
/// least as close to the first pivot as to the second (ties left), with the
/// pivots themselves forced left/right. Pivot pairs at distance zero are
/// resampled up to |node| times; a node whose draws keep colliding is frozen
/// as an oversized leaf. Identical (n, n0, seed) reproduce the identical tree
/// for a fixed oracle because each node draws from its own stream keyed by
/// (seed, node path).
template <class Oracle>
CompTree build_comptree(std::size_t n, std::uint32_t n0, std::uint64_t seed, Oracle& oracle,
                        std::uint64_t dataset_fingerprint = 0) {
    if (n == 0) throw DataError("cannot build a comparison tree over an empty dataset");
    if (n0 < 1) throw ConfigError("maximum leaf size n0 must be >= 1");
    if (n > static_cast<std::size_t>(kNoPoint))
        throw DataError("dataset too large for 32-bit point ids");

    std::vector<PointId> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<PointId>(i);

    std::vector<CompTreeNode> nodes;
    nodes.push_back(CompTreeNode{0, static_cast<std::uint32_t>(n), -1, -1, kNoPoint, kNoPoint, 0, false});

    std::uint64_t build_triplets = 0;
    std::uint64_t duplicate_probes = 0;
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
        CompTreeNode& node = nodes[top.node];
        const std::uint32_t m = node.size();
        if (m <= n0) {
            if (node.depth > height) height = node.depth;
            continue;
        }

        SplitMix64 gen(top.stream);
        PointId x1 = kNoPoint, x2 = kNoPoint;
        bool found = false;
        for (std::uint32_t attempt = 0; attempt < m; ++attempt) {
            const auto [a, b] = draw_distinct_pair(gen, m);
            x1 = perm[node.begin + a];
            x2 = perm[node.begin + b];
            ++duplicate_probes;
            if (!oracle.same_point(x1, x2)) {
                found = true;
                break;
            }
        }
        if (!found) {
            // Every draw collided at distance zero: no split can progress.
            node.frozen = true;
            if (node.depth > height) height = node.depth;
            continue;
        }

        left_buf.clear();
        right_buf.clear();
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const PointId p = perm[i];
            if (p == x1) {
                left_buf.push_back(p);
            } else if (p == x2) {
                right_buf.push_back(p);
            } else {
                ++build_triplets;
                if (oracle.triplet(p, x1, x2) == Closer::ToY)
                    left_buf.push_back(p);
                else
                    right_buf.push_back(p);
            }
        }
        const std::uint32_t mid = node.begin + static_cast<std::uint32_t>(left_buf.size());
        std::copy(left_buf.begin(), left_buf.end(), perm.begin() + node.begin);
        std::copy(right_buf.begin(), right_buf.end(), perm.begin() + mid);

        node.left_pivot = x1;
        node.right_pivot = x2;
        const std::uint32_t left_idx = static_cast<std::uint32_t>(nodes.size());
        const std::uint32_t right_idx = left_idx + 1;
        node.left = static_cast<std::int32_t>(left_idx);
        node.right = static_cast<std::int32_t>(right_idx);
        const std::uint32_t depth = node.depth + 1;
        const std::uint32_t begin = node.begin;
        const std::uint32_t end = node.end;
        nodes.push_back(CompTreeNode{begin, mid, -1, -1, kNoPoint, kNoPoint, depth, false});
        nodes.push_back(CompTreeNode{mid, end, -1, -1, kNoPoint, kNoPoint, depth, false});
        stack.push_back({right_idx, derive_stream(top.stream, 2)});
        stack.push_back({left_idx, derive_stream(top.stream, 1)});
    }

    return CompTree(n0, seed, std::move(perm), std::move(nodes), height, build_triplets,
                    duplicate_probes, dataset_fingerprint);
}

template <class Oracle>
CompTree build_comptree(const Dataset& S, std::uint32_t n0, std::uint64_t seed, Oracle& oracle) {
    return build_comptree(S.size(), n0, seed, oracle, S.fingerprint());
}

/// Result of one defeatist search.
struct SearchReport {
    PointId neighbor = kNoPoint;
    std::uint64_t triplets_used = 0;
    std::uint32_t leaf_depth = 0;
    std::uint32_t leaf_size = 0;
    /// Set when leave-one-out exclusion emptied the query's leaf and the
    /// answer came from descending the sibling subtree instead.
    bool used_sibling_fallback = false;
};

namespace detail {

/// Greedy root-to-leaf descent; returns the path of node indices.
template <class Oracle>
std::vector<std::uint32_t> defeatist_descend(const CompTree& tree, const Query& q, Oracle& oracle,
                                             std::uint32_t start, std::uint64_t& triplets) {
    std::vector<std::uint32_t> path;
    std::uint32_t at = start;
    while (true) {
        path.push_back(at);
        const CompTreeNode& node = tree.nodes()[at];
        if (node.is_leaf()) return path;
        ++triplets;
        const Closer side = oracle.triplet(q, node.left_pivot, node.right_pivot);
        at = static_cast<std::uint32_t>(side == Closer::ToY ? node.left : node.right);
    }
}

/// Exhaustive leaf scan via triplets of form (q, best-so-far, next); the
/// first-encountered minimizer wins, and members are kept in ascending id
/// order within each leaf, so the result is deterministic.
template <class Oracle>
PointId scan_leaf(std::span<const PointId> members, const Query& q, Oracle& oracle,
                  std::optional<PointId> exclude, std::uint64_t& triplets) {
    PointId best = kNoPoint;
    for (PointId p : members) {
        if (exclude && *exclude == p) continue;
        if (best == kNoPoint) {
            best = p;
            continue;
        }
        ++triplets;
        if (oracle.triplet(q, best, p) == Closer::ToZ) best = p;
    }
    return best;
}

} // namespace detail

/// Algorithm: descend left iff the query is at least as close to the left
/// pivot as to the right one, then scan the leaf exhaustively with
/// (leaf candidates - 1) triplet comparisons. With `exclude` set (leave-one-
/// out) the excluded point is skipped at the leaf scan only; a leaf that
/// empties out falls back to one extra descent of the sibling subtree.
template <class Oracle>
SearchReport nn_search(const CompTree& tree, const Query& q, Oracle& oracle,
                       std::optional<PointId> exclude = std::nullopt) {
    SearchReport report;
    std::vector<std::uint32_t> path = detail::defeatist_descend(tree, q, oracle, 0, report.triplets_used);
    const CompTreeNode* leaf = &tree.nodes()[path.back()];
    PointId best = detail::scan_leaf(tree.members(*leaf), q, oracle, exclude, report.triplets_used);
    if (best == kNoPoint) {
        if (path.size() < 2)
            throw DataError("leave-one-out search over a single excluded point");
        const CompTreeNode& parent = tree.nodes()[path[path.size() - 2]];
        const std::uint32_t sibling = static_cast<std::uint32_t>(
            static_cast<std::uint32_t>(parent.left) == path.back() ? parent.right : parent.left);
        path = detail::defeatist_descend(tree, q, oracle, sibling, report.triplets_used);
        leaf = &tree.nodes()[path.back()];
        best = detail::scan_leaf(tree.members(*leaf), q, oracle, exclude, report.triplets_used);
        report.used_sibling_fallback = true;
    }
    report.neighbor = best;
    report.leaf_depth = leaf->depth;
    report.leaf_size = leaf->size();
    return report;
}

/// Ranked leaf candidates for kNN-style use: descends as nn_search, then
/// orders the leaf by a counted merge sort whose comparisons are triplet
/// queries (q, a, b). Uses at most leaf_size * ceil(log2 leaf_size) extra
/// triplets.
struct CandidateReport {
    std::vector<PointId> neighbors; // ascending distance from q
    std::uint64_t triplets_used = 0;
    std::uint32_t leaf_depth = 0;
    std::uint32_t leaf_size = 0;
    bool used_sibling_fallback = false;
};

namespace detail {

template <class Oracle>
void merge_sort_by_query(std::vector<PointId>& ids, std::vector<PointId>& scratch, std::size_t lo,
                         std::size_t hi, const Query& q, Oracle& oracle, std::uint64_t& triplets) {
    if (hi - lo <= 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    merge_sort_by_query(ids, scratch, lo, mid, q, oracle, triplets);
    merge_sort_by_query(ids, scratch, mid, hi, q, oracle, triplets);
    std::size_t i = lo, j = mid, out = lo;
    while (i < mid && j < hi) {
        ++triplets;
        // d(q, ids[i]) <= d(q, ids[j]) keeps the earlier element first: stable.
        if (oracle.triplet(q, ids[i], ids[j]) == Closer::ToY)
            scratch[out++] = ids[i++];
        else
            scratch[out++] = ids[j++];
    }
    while (i < mid) scratch[out++] = ids[i++];
    while (j < hi) scratch[out++] = ids[j++];
    std::copy(scratch.begin() + lo, scratch.begin() + hi, ids.begin() + lo);
}

} // namespace detail

template <class Oracle>
CandidateReport leaf_candidates(const CompTree& tree, const Query& q, Oracle& oracle,
                                std::size_t k, std::optional<PointId> exclude = std::nullopt) {
    if (k < 1) throw ConfigError("leaf_candidates needs k >= 1");
    CandidateReport report;
    std::vector<std::uint32_t> path = detail::defeatist_descend(tree, q, oracle, 0, report.triplets_used);
    const CompTreeNode* leaf = &tree.nodes()[path.back()];
    auto collect = [&](const CompTreeNode& node) {
        std::vector<PointId> ids;
        ids.reserve(node.size());
        for (PointId p : tree.members(node))
            if (!exclude || *exclude != p) ids.push_back(p);
        return ids;
    };
    std::vector<PointId> ids = collect(*leaf);
    if (ids.empty()) {
        if (path.size() < 2)
            throw DataError("leave-one-out search over a single excluded point");
        const CompTreeNode& parent = tree.nodes()[path[path.size() - 2]];
        const std::uint32_t sibling = static_cast<std::uint32_t>(
            static_cast<std::uint32_t>(parent.left) == path.back() ? parent.right : parent.left);
        path = detail::defeatist_descend(tree, q, oracle, sibling, report.triplets_used);
        leaf = &tree.nodes()[path.back()];
        ids = collect(*leaf);
        report.used_sibling_fallback = true;
    }
    std::vector<PointId> scratch(ids.size());
    detail::merge_sort_by_query(ids, scratch, 0, ids.size(), q, oracle, report.triplets_used);
    if (ids.size() > k) ids.resize(k);
    report.neighbors = std::move(ids);
    report.leaf_depth = leaf->depth;
    report.leaf_size = leaf->size();
    return report;
}

/// Summary counts from a full traversal.
struct TreeStats {
    std::uint32_t height = 0;
    std::map<std::uint32_t, std::uint32_t> leaf_size_histogram;
    std::vector<std::uint32_t> nodes_per_depth;
    std::uint64_t build_triplets = 0;
    std::uint64_t duplicate_probes = 0;
    std::uint32_t leaf_count = 0;
    std::uint32_t frozen_leaf_count = 0;
};

inline TreeStats tree_stats(const CompTree& tree) {
    TreeStats stats;
    stats.height = tree.height();
    stats.build_triplets = tree.build_triplets();
    stats.duplicate_probes = tree.duplicate_probes();
    for (const CompTreeNode& node : tree.nodes()) {
        if (node.depth >= stats.nodes_per_depth.size()) stats.nodes_per_depth.resize(node.depth + 1, 0);
        ++stats.nodes_per_depth[node.depth];
        if (node.is_leaf()) {
            ++stats.leaf_count;
            ++stats.leaf_size_histogram[node.size()];
            if (node.frozen) ++stats.frozen_leaf_count;
        }
    }
    return stats;
}

// --- serialization (versioned flat record) ---

inline constexpr int kTreeFormatVersion = 1;

inline nlohmann::json comptree_to_json(const CompTree& tree) {
    nlohmann::json j;
    j["format"] = "tnn-tree";
    j["version"] = kTreeFormatVersion;
    j["method"] = "comptree";
    j["n"] = tree.size();
    j["n0"] = tree.n0();
    j["seed"] = tree.seed();
    j["height"] = tree.height();
    j["build_triplets"] = tree.build_triplets();
    j["duplicate_probes"] = tree.duplicate_probes();
    j["dataset_fingerprint"] = tree.dataset_fingerprint();
    j["perm"] = tree.perm();
    nlohmann::json nodes = nlohmann::json::array();
    for (const CompTreeNode& node : tree.nodes()) {
        nodes.push_back({node.begin, node.end, node.left, node.right,
                         static_cast<std::int64_t>(node.is_leaf() ? -1 : static_cast<std::int64_t>(node.left_pivot)),
                         static_cast<std::int64_t>(node.is_leaf() ? -1 : static_cast<std::int64_t>(node.right_pivot)),
                         node.depth, node.frozen ? 1 : 0});
    }
    j["nodes"] = std::move(nodes);
    return j;
}

inline CompTree comptree_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "tnn-tree")
        throw DataError("not a tnn-tree record");
    if (j.value("version", -1) != kTreeFormatVersion)
        throw DataError("unsupported tree format version");
    if (j.value("method", "") != "comptree")
        throw DataError("tree record is not a comptree (method tag mismatch)");
    const std::size_t n = j.at("n").get<std::size_t>();
    std::vector<PointId> perm = j.at("perm").get<std::vector<PointId>>();
    if (perm.size() != n) throw DataError("tree record: perm length mismatch");
    std::vector<CompTreeNode> nodes;
    for (const auto& row : j.at("nodes")) {
        if (!row.is_array() || row.size() != 8) throw DataError("tree record: malformed node row");
        CompTreeNode node;
        node.begin = row[0].get<std::uint32_t>();
        node.end = row[1].get<std::uint32_t>();
        node.left = row[2].get<std::int32_t>();
        node.right = row[3].get<std::int32_t>();
        const std::int64_t lp = row[4].get<std::int64_t>();
        const std::int64_t rp = row[5].get<std::int64_t>();
        node.left_pivot = lp < 0 ? kNoPoint : static_cast<PointId>(lp);
        node.right_pivot = rp < 0 ? kNoPoint : static_cast<PointId>(rp);
        node.depth = row[6].get<std::uint32_t>();
        node.frozen = row[7].get<int>() != 0;
        if (node.begin > node.end || node.end > n) throw DataError("tree record: node range out of bounds");
        nodes.push_back(node);
    }
    if (nodes.empty()) throw DataError("tree record: no nodes");
    return CompTree(j.at("n0").get<std::uint32_t>(), j.at("seed").get<std::uint64_t>(),
                    std::move(perm), std::move(nodes), j.at("height").get<std::uint32_t>(),
                    j.at("build_triplets").get<std::uint64_t>(),
                    j.at("duplicate_probes").get<std::uint64_t>(),
                    j.at("dataset_fingerprint").get<std::uint64_t>());
}

} // namespace tnn

#endif // TNN_COMPTREE_HPP
