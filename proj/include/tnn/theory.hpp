#pragma once
#ifndef TNN_THEORY_HPP
#define TNN_THEORY_HPP

#include <tnn/core.hpp>
#include <tnn/csv.hpp>
#include <tnn/dataset.hpp>
#include <tnn/metric.hpp>
#include <tnn/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace tnn {

/// High-probability height bound 3*ln(e/epsilon) + 96*c_tilde^2*ln(n/n0).
/// Logarithms are natural: the first term vanishes exactly at epsilon = e.
inline double height_bound(double n, double n0, double c_tilde, double epsilon) {
    if (!(n0 >= 1.0) || !(n >= n0)) throw std::invalid_argument("height_bound needs 1 <= n0 <= n");
    if (!(c_tilde >= 1.0)) throw std::invalid_argument("height_bound needs c_tilde >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("height_bound needs epsilon > 0");
    return 3.0 * std::log(std::exp(1.0) / epsilon) + 96.0 * c_tilde * c_tilde * std::log(n / n0);
}

/// At most n*h_star triplet comparisons to construct the tree.
inline double construction_budget(double n, double h_star) {
    if (n < 0.0 || h_star < 0.0) throw std::invalid_argument("budget inputs must be non-negative");
    return n * h_star;
}

/// At most h_star + n0 triplet comparisons per query.
inline double query_budget(double h_star, double n0) {
    if (h_star < 0.0 || n0 < 0.0) throw std::invalid_argument("budget inputs must be non-negative");
    return h_star + n0;
}

/// Probability bound (360*C*c_tilde^2/alpha)*n0^(-alpha) on missing the exact
/// nearest neighbor; the raw value can exceed 1 and is then vacuous, so the
/// clamped value is also reported.
struct ErrorBound {
    double raw = 0.0;
    double clamped = 0.0;
};

inline ErrorBound error_bound(double C, double alpha, double c_tilde, double n0) {
    if (!(C > 0.0)) throw std::invalid_argument("error_bound needs C > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("error_bound needs alpha in (0,1]");
    if (!(c_tilde >= 1.0)) throw std::invalid_argument("error_bound needs c_tilde >= 1");
    if (!(n0 >= 1.0)) throw std::invalid_argument("error_bound needs n0 >= 1");
    const double raw = 360.0 * C * c_tilde * c_tilde * std::pow(n0, -alpha) / alpha;
    return {raw, std::min(1.0, raw)};
}

/// Evaluated bounds with all inputs recorded.
struct BoundReport {
    double n = 0.0;
    double n0 = 0.0;
    double c_tilde = 1.0;
    double epsilon = 0.0;
    double h_star = 0.0;
    double construction_budget = 0.0;
    double query_budget = 0.0;
    std::optional<double> C;
    std::optional<double> alpha;
    std::optional<double> error_bound_raw;
    std::optional<double> error_bound_clamped;
};

inline BoundReport evaluate_bounds(double n, double n0, double c_tilde, double epsilon,
                                   std::optional<double> C = std::nullopt,
                                   std::optional<double> alpha = std::nullopt) {
    BoundReport r;
    r.n = n;
    r.n0 = n0;
    r.c_tilde = c_tilde;
    r.epsilon = epsilon;
    r.h_star = height_bound(n, n0, c_tilde, epsilon);
    const double h_for_budget = std::max(0.0, r.h_star);
    r.construction_budget = construction_budget(n, h_for_budget);
    r.query_budget = query_budget(h_for_budget, n0);
    if (C && alpha) {
        r.C = C;
        r.alpha = alpha;
        const ErrorBound eb = error_bound(*C, *alpha, c_tilde, n0);
        r.error_bound_raw = eb.raw;
        r.error_bound_clamped = eb.clamped;
    }
    return r;
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
    nlohmann::json j;
    j["n"] = r.n;
    j["n0"] = r.n0;
    j["c_tilde"] = r.c_tilde;
    j["epsilon"] = r.epsilon;
    j["h_star"] = r.h_star;
    j["construction_budget"] = r.construction_budget;
    j["query_budget"] = r.query_budget;
    j["C"] = r.C ? nlohmann::json(*r.C) : nlohmann::json(nullptr);
    j["alpha"] = r.alpha ? nlohmann::json(*r.alpha) : nlohmann::json(nullptr);
    j["error_bound_raw"] = r.error_bound_raw ? nlohmann::json(*r.error_bound_raw) : nlohmann::json(nullptr);
    j["error_bound_clamped"] =
        r.error_bound_clamped ? nlohmann::json(*r.error_bound_clamped) : nlohmann::json(nullptr);
    return j;
}

/// Empirical pointwise expansion rates over a sample of the dataset.
struct ExpansionProfile {
    std::vector<std::pair<PointId, double>> values; // (point id, c_tilde(x)), ascending by id
    double dataset_max = 1.0;
    std::size_t sample_size = 0;
};

namespace detail {

/// c_tilde(x) = max over candidate radii r of |B(x,2r)| / |B(x,r)| against
/// the whole set, where candidates are every distinct distance from x and
/// every half distance. Both ball counts are right-continuous step functions
/// whose breakpoints these are, so the max over all r > 0 is attained here.
/// Halving and doubling are exact in binary floating point, which keeps the
/// two evaluation grids aligned.
inline double expansion_rate_from_distances(std::vector<double>& dists) {
    std::sort(dists.begin(), dists.end());
    std::vector<double> candidates;
    candidates.reserve(2 * dists.size());
    for (double d : dists) {
        if (d <= 0.0) continue;
        candidates.push_back(d);
        candidates.push_back(d * 0.5);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best = 1.0;
    for (double r : candidates) {
        const auto inner =
            std::upper_bound(dists.begin(), dists.end(), r) - dists.begin();
        const auto outer =
            std::upper_bound(dists.begin(), dists.end(), 2.0 * r) - dists.begin();
        const double ratio = static_cast<double>(outer) / static_cast<double>(inner);
        if (ratio > best) best = ratio;
    }
    return best;
}

} // namespace detail

/// Estimates c_tilde(x) for each sampled point against A = S. Per-point
/// computations are independent; `threads` > 1 splits the sample across
/// workers with results merged by position.
template <class Metric>
ExpansionProfile empirical_expansion_rate(std::size_t n, const Metric& metric,
                                          const std::vector<PointId>& sample,
                                          unsigned threads = 1) {
    if (sample.empty()) throw std::invalid_argument("expansion estimation needs a non-empty sample");
    if (n < 2) throw std::invalid_argument("expansion estimation needs at least 2 points");
    ExpansionProfile profile;
    profile.sample_size = sample.size();
    profile.values.resize(sample.size());
    auto worker = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> dists;
        for (std::size_t i = lo; i < hi; ++i) {
            const PointId x = sample[i];
            dists.clear();
            dists.reserve(n);
            for (PointId p = 0; p < n; ++p) dists.push_back(metric.between(x, p));
            profile.values[i] = {x, detail::expansion_rate_from_distances(dists)};
        }
    };
    if (threads <= 1 || sample.size() < 2 * threads) {
        worker(0, sample.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (sample.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = std::min<std::size_t>(t * chunk, sample.size());
            const std::size_t hi = std::min<std::size_t>(lo + chunk, sample.size());
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    std::sort(profile.values.begin(), profile.values.end());
    for (const auto& [id, c] : profile.values) profile.dataset_max = std::max(profile.dataset_max, c);
    return profile;
}

inline ExpansionProfile empirical_expansion_rate(const Dataset& S, const MetricEvaluator& metric,
                                                 const std::vector<PointId>& sample,
                                                 unsigned threads = 1) {
    return empirical_expansion_rate<MetricEvaluator>(S.size(), metric, sample, threads);
}

/// A uniform sample of point ids without replacement, ascending; caps follow
/// the 10000-point estimation protocol by default.
inline std::vector<PointId> sample_point_ids(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<PointId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<PointId>(i);
    if (n <= cap) return ids;
    SplitMix64 g(derive_stream(seed, 0xe9a7u));
    for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j = i + g.below(n - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(cap);
    std::sort(ids.begin(), ids.end());
    return ids;
}

inline void expansion_profile_to_csv(const ExpansionProfile& profile, std::ostream& out) {
    out << "point_id,c_tilde\n";
    for (const auto& [id, c] : profile.values) out << id << ',' << format_double(c) << '\n';
}

inline nlohmann::json expansion_profile_to_json(const ExpansionProfile& profile) {
    nlohmann::json j;
    j["sample_size"] = profile.sample_size;
    j["dataset_max"] = profile.dataset_max;
    nlohmann::json values = nlohmann::json::array();
    for (const auto& [id, c] : profile.values) values.push_back({id, c});
    j["values"] = std::move(values);
    return j;
}

/// Smallest D >= 1 on a 0.01 grid with |B(q,lr)| <= l^D |B(q,r)| over all
/// breakpoint radius pairs r < lr, restricted to radii at least the true
/// nearest-neighbor distance (and positive), with A = S.
inline double estimate_growth_exponent(const MetricEvaluator& metric, const Query& q,
                                       double grid = 0.01) {
    const std::vector<double> all = metric.all_to_query(q);
    if (all.size() < 2) throw std::invalid_argument("growth exponent needs at least 2 points");
    double nn_dist = std::numeric_limits<double>::infinity();
    for (PointId p = 0; p < all.size(); ++p) {
        if (q.is_member() && q.member_id() == p) continue;
        nn_dist = std::min(nn_dist, all[p]);
    }
    std::vector<double> sorted(all);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> radii;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double e = sorted[i];
        if (e <= 0.0 || e < nn_dist) continue;
        if (!radii.empty() && radii.back() == e) continue;
        radii.push_back(e);
        counts.push_back(std::upper_bound(sorted.begin(), sorted.end(), e) - sorted.begin());
    }
    if (radii.empty()) throw std::invalid_argument("growth exponent is undefined: query coincides with every point");
    double required = 1.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        for (std::size_t j = i + 1; j < radii.size(); ++j) {
            const double d = std::log(static_cast<double>(counts[j]) / static_cast<double>(counts[i])) /
                             std::log(radii[j] / radii[i]);
            if (d > required) required = d;
        }
    }
    const double steps = std::ceil(required / grid - 1e-9);
    return std::max(1.0, steps * grid);
}

/// Monte Carlo check of the unbalanced-split probability: draws `trials`
/// independent pivot pairs from A, splits exactly as tree construction does,
/// and returns the fraction of trials where the smaller child has fewer than
/// delta*|A| members.
template <class Metric>
double split_balance_trial(const std::vector<PointId>& A, const Metric& metric, double delta,
                           std::size_t trials, std::uint64_t seed) {
    if (A.size() < 2) throw std::invalid_argument("split trial needs |A| >= 2");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("split trial needs delta in (0,1)");
    if (trials < 1) throw std::invalid_argument("split trial needs trials >= 1");
    const std::size_t m = A.size();
    SplitMix64 g(derive_stream(seed, 0x51b7u));
    std::size_t unbalanced = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        PointId x1 = kNoPoint, x2 = kNoPoint;
        bool found = false;
        for (std::size_t attempt = 0; attempt < m; ++attempt) {
            const auto [a, b] = draw_distinct_pair(g, m);
            x1 = A[a];
            x2 = A[b];
            if (!metric.same_payload(x1, x2)) {
                found = true;
                break;
            }
        }
        if (!found) continue; // construction would freeze, no child is created
        std::size_t left = 1; // x1
        for (PointId p : A) {
            if (p == x1 || p == x2) continue;
            if (metric.between(p, x1) <= metric.between(p, x2)) ++left;
        }
        const std::size_t smaller = std::min(left, m - left);
        if (static_cast<double>(smaller) < delta * static_cast<double>(m)) ++unbalanced;
    }
    return static_cast<double>(unbalanced) / static_cast<double>(trials);
}

} // namespace tnn

#endif // TNN_THEORY_HPP
