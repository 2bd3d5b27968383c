#pragma once
#ifndef TNN_BENCH_HPP
#define TNN_BENCH_HPP

#include <tnn/baselines.hpp>
#include <tnn/brute_force.hpp>
#include <tnn/comptree.hpp>
#include <tnn/core.hpp>
#include <tnn/csv.hpp>
#include <tnn/dataset.hpp>
#include <tnn/metric.hpp>
#include <tnn/oracle.hpp>
#include <tnn/synthetic.hpp>
#include <tnn/theory.hpp>

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace tnn {

enum class Method : std::uint8_t { CompTree, KdTree, RpTree, PaTree, Brute };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::CompTree: return "comptree";
        case Method::KdTree: return "kdtree";
        case Method::RpTree: return "rptree";
        case Method::PaTree: return "patree";
        case Method::Brute: return "brute";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "comptree") return Method::CompTree;
    if (s == "kdtree") return Method::KdTree;
    if (s == "rptree") return Method::RpTree;
    if (s == "patree") return Method::PaTree;
    if (s == "brute") return Method::Brute;
    throw ConfigError("unknown method '" + s + "'");
}

enum class BenchMode : std::uint8_t { LeaveOneOut, Holdout };
enum class DataFormat : std::uint8_t { VectorCsv, CategoricalCsv, GraphEdges };

inline DataFormat parse_data_format(const std::string& s) {
    if (s == "vector-csv") return DataFormat::VectorCsv;
    if (s == "categorical-csv") return DataFormat::CategoricalCsv;
    if (s == "graph-edges") return DataFormat::GraphEdges;
    throw ConfigError("unknown dataset format '" + s + "'");
}

struct BenchConfig {
    std::string dataset_path;
    std::string dataset_label; // as written in the config; used in output rows
    DataFormat format = DataFormat::VectorCsv;
    bool header = false;
    std::vector<Method> methods;
    std::vector<std::uint32_t> n0_list;
    std::vector<std::uint64_t> seeds{0};
    BenchMode mode = BenchMode::LeaveOneOut;
    std::uint32_t holdout_size = 1000;
    std::uint64_t loo_query_cap = 0; // 0 = query every point
    std::string output; // path prefix; .csv and .json are appended
    bool parallel = false;
    unsigned threads = 0; // 0 = hardware concurrency
    std::size_t graph_cache_limit = 20000;
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

template <class T>
T parse_integer(const std::string& v, const std::string& key) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string item(trim(comma == std::string::npos ? std::string_view(v).substr(start)
                                                              : std::string_view(v).substr(start, comma - start)));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace detail

/// Parses the flat key-value config format: one `key = value` per line,
/// '#' starts a comment, lists are comma-separated.
inline BenchConfig parse_bench_config(std::istream& in, const std::string& base_dir = "") {
    BenchConfig cfg;
    bool saw_dataset = false, saw_method = false, saw_output = false, saw_seeds = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string_view stripped = detail::trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(detail::trim(stripped.substr(0, eq)));
        const std::string value(detail::trim(stripped.substr(eq + 1)));
        if (value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" + key + "'");
        if (key == "dataset") {
            cfg.dataset_label = value;
            std::filesystem::path p(value);
            cfg.dataset_path = (p.is_absolute() || base_dir.empty())
                                   ? value
                                   : (std::filesystem::path(base_dir) / p).string();
            saw_dataset = true;
        } else if (key == "format") {
            cfg.format = parse_data_format(value);
        } else if (key == "header") {
            cfg.header = detail::parse_bool(value, key);
        } else if (key == "method" || key == "methods") {
            cfg.methods.clear();
            for (const std::string& item : detail::split_list(value))
                cfg.methods.push_back(parse_method(item));
            saw_method = true;
        } else if (key == "n0") {
            cfg.n0_list.clear();
            for (const std::string& item : detail::split_list(value)) {
                const auto v = detail::parse_integer<std::uint32_t>(item, key);
                if (v < 1) throw ConfigError("n0 values must be >= 1");
                cfg.n0_list.push_back(v);
            }
        } else if (key == "seeds" || key == "seed") {
            cfg.seeds.clear();
            for (const std::string& item : detail::split_list(value))
                cfg.seeds.push_back(detail::parse_integer<std::uint64_t>(item, key));
            saw_seeds = true;
        } else if (key == "mode") {
            if (value == "leave-one-out")
                cfg.mode = BenchMode::LeaveOneOut;
            else if (value == "holdout")
                cfg.mode = BenchMode::Holdout;
            else
                throw ConfigError("mode must be 'leave-one-out' or 'holdout', got '" + value + "'");
        } else if (key == "holdout_size") {
            cfg.holdout_size = detail::parse_integer<std::uint32_t>(value, key);
        } else if (key == "loo_query_cap") {
            cfg.loo_query_cap = detail::parse_integer<std::uint64_t>(value, key);
        } else if (key == "output") {
            std::filesystem::path p(value);
            cfg.output = (p.is_absolute() || base_dir.empty())
                             ? value
                             : (std::filesystem::path(base_dir) / p).string();
            saw_output = true;
        } else if (key == "parallel") {
            cfg.parallel = detail::parse_bool(value, key);
        } else if (key == "threads") {
            cfg.threads = detail::parse_integer<unsigned>(value, key);
        } else if (key == "graph_cache_limit") {
            cfg.graph_cache_limit = detail::parse_integer<std::size_t>(value, key);
        } else {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (!saw_dataset) throw ConfigError("config is missing 'dataset'");
    if (!saw_method || cfg.methods.empty()) throw ConfigError("config is missing 'method'");
    if (!saw_output) throw ConfigError("config is missing 'output'");
    if (!saw_seeds || cfg.seeds.empty()) throw ConfigError("config needs at least one seed");
    bool needs_n0 = false;
    for (Method m : cfg.methods) needs_n0 = needs_n0 || m != Method::Brute;
    if (needs_n0 && cfg.n0_list.empty()) throw ConfigError("config is missing 'n0' for tree methods");
    if (cfg.mode == BenchMode::Holdout && cfg.holdout_size < 1)
        throw ConfigError("holdout_size must be >= 1");
    for (Method m : cfg.methods) {
        const bool euclidean_only =
            m == Method::KdTree || m == Method::RpTree || m == Method::PaTree;
        if (euclidean_only && cfg.format != DataFormat::VectorCsv)
            throw ConfigError(std::string("method '") + to_string(m) +
                              "' needs a dense-vector dataset (format vector-csv)");
    }
    return cfg;
}

inline BenchConfig load_bench_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_bench_config(in, std::filesystem::path(path).parent_path().string());
}

inline Dataset load_bench_dataset(const BenchConfig& cfg) {
    switch (cfg.format) {
        case DataFormat::VectorCsv: return load_vector_csv(cfg.dataset_path, cfg.header);
        case DataFormat::CategoricalCsv: return load_categorical_csv(cfg.dataset_path, cfg.header);
        case DataFormat::GraphEdges: return load_graph_edges(cfg.dataset_path);
    }
    throw ConfigError("corrupt dataset format");
}

/// A built index of any benchmarked method, answering one query at a time.
/// Queries are thread-safe: each call carries its own triplet counter.
class BuiltIndex {
public:
    struct Answer {
        PointId neighbor = kNoPoint;
        double distance = 0.0;
        std::optional<std::uint64_t> triplets; // comparison-based methods only
    };

    static BuiltIndex build(Method method, const Dataset& ds, const MetricEvaluator& metric,
                            std::uint32_t n0, std::uint64_t seed) {
        BuiltIndex idx;
        idx.method_ = method;
        idx.ds_ = &ds;
        idx.metric_ = &metric;
        switch (method) {
            case Method::CompTree: {
                TripletOracle oracle(metric);
                idx.comptree_.emplace(build_comptree(ds, n0, seed, oracle));
                break;
            }
            case Method::KdTree:
                idx.axis_.emplace(build_kdtree(ds, n0));
                break;
            case Method::RpTree:
                idx.axis_.emplace(build_rptree(ds, n0, seed));
                break;
            case Method::PaTree:
                idx.axis_.emplace(build_patree(ds, n0));
                break;
            case Method::Brute:
                break;
        }
        return idx;
    }

    Method method() const { return method_; }
    const CompTree* comptree() const { return comptree_ ? &*comptree_ : nullptr; }
    const AxisSplitTree* axis_tree() const { return axis_ ? &*axis_ : nullptr; }

    std::optional<std::uint64_t> build_triplets() const {
        if (comptree_) return comptree_->build_triplets();
        return std::nullopt;
    }
    std::optional<std::uint32_t> height() const {
        if (comptree_) return comptree_->height();
        if (axis_) return axis_->height();
        return std::nullopt;
    }
    bool has_frozen_leaves() const {
        if (!comptree_) return false;
        for (const CompTreeNode& node : comptree_->nodes())
            if (node.frozen) return true;
        return false;
    }

    Answer query(const Query& q, std::optional<PointId> exclude = std::nullopt) const {
        Answer a;
        switch (method_) {
            case Method::CompTree: {
                TripletOracle oracle(*metric_);
                const SearchReport r = nn_search(*comptree_, q, oracle, exclude);
                a.neighbor = r.neighbor;
                a.distance = metric_->to_query(q, r.neighbor);
                a.triplets = r.triplets_used;
                return a;
            }
            case Method::KdTree:
            case Method::RpTree:
            case Method::PaTree: {
                const double* qv = nullptr;
                if (q.is_member())
                    qv = ds_->vector_at(q.member_id());
                else if (const auto* payload = q.vector_payload())
                    qv = payload->data();
                else
                    throw DataError("baseline trees answer only dense-vector queries");
                const DefeatistReport r =
                    defeatist_query(*axis_, *ds_, {qv, ds_->dim()}, exclude);
                a.neighbor = r.neighbor;
                a.distance = r.distance;
                return a;
            }
            case Method::Brute: {
                const NnResult r = brute_force_nn(*metric_, q, exclude);
                a.neighbor = r.best;
                a.distance = r.distance;
                return a;
            }
        }
        throw ConfigError("corrupt method");
    }

private:
    Method method_ = Method::Brute;
    const Dataset* ds_ = nullptr;
    const MetricEvaluator* metric_ = nullptr;
    std::optional<CompTree> comptree_;
    std::optional<AxisSplitTree> axis_;
};

struct PerQueryRecord {
    std::size_t query_index = 0; // position in the query list (LOO: the PointId)
    PointId returned = kNoPoint;
    double d_alg = 0.0;
    double d_true = 0.0;
    bool hit = false;
    std::optional<std::uint64_t> triplets;
};

struct LooReport {
    double miss_probability = 0.0;
    std::uint64_t misses = 0;
    std::vector<PerQueryRecord> records;
};

struct RdeReport {
    std::optional<double> mean; // absent when every query was excluded
    std::uint64_t excluded = 0;
    std::vector<PerQueryRecord> records;
};

namespace detail {

inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (threads <= 1 || count < 2 * threads) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = std::min<std::size_t>(static_cast<std::size_t>(t) * chunk, count);
        const std::size_t hi = std::min(lo + chunk, count);
        if (lo < hi) pool.emplace_back(fn, lo, hi);
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

/// True leave-one-out nearest-neighbor distance for every point, computed by
/// exhaustive scan. Shared across all rows of a run.
inline std::vector<double> loo_true_distances(const Dataset& ds, const MetricEvaluator& metric,
                                              unsigned threads = 1) {
    if (ds.size() < 2) throw DataError("leave-one-out evaluation needs at least 2 points");
    std::vector<double> out(ds.size());
    detail::parallel_for(ds.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q)
            out[q] = brute_force_nn(metric, Query::member(static_cast<PointId>(q)),
                                    static_cast<PointId>(q))
                         .distance;
    });
    return out;
}

/// Leave-one-out protocol: every point queries the index built on the full
/// set with itself excluded at leaf-scan time. A query is a hit iff the
/// returned point's distance equals the true minimum (tie-aware).
inline LooReport leave_one_out_error(const BuiltIndex& index, const Dataset& ds,
                                     const std::vector<double>& true_dist,
                                     const std::vector<PointId>* query_ids = nullptr,
                                     unsigned threads = 1) {
    LooReport report;
    const std::size_t count = query_ids ? query_ids->size() : ds.size();
    report.records.resize(count);
    detail::parallel_for(count, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const PointId qid = query_ids ? (*query_ids)[i] : static_cast<PointId>(i);
            const BuiltIndex::Answer a = index.query(Query::member(qid), qid);
            PerQueryRecord& rec = report.records[i];
            rec.query_index = qid;
            rec.returned = a.neighbor;
            rec.d_alg = a.distance;
            rec.d_true = true_dist[qid];
            rec.hit = a.distance == true_dist[qid];
            rec.triplets = a.triplets;
        }
    });
    for (const PerQueryRecord& rec : report.records)
        if (!rec.hit) ++report.misses;
    report.miss_probability = static_cast<double>(report.misses) / static_cast<double>(count);
    return report;
}

/// Holdout protocol: mean over queries of (d_alg / d_NN - 1); queries whose
/// true nearest distance is zero are excluded from the mean and counted.
inline RdeReport relative_distance_error(const BuiltIndex& index, const MetricEvaluator& metric,
                                         const std::vector<Query>& queries, unsigned threads = 1) {
    RdeReport report;
    report.records.resize(queries.size());
    detail::parallel_for(queries.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const BuiltIndex::Answer a = index.query(queries[i]);
            PerQueryRecord& rec = report.records[i];
            rec.query_index = i;
            rec.returned = a.neighbor;
            rec.d_alg = a.distance;
            rec.d_true = brute_force_nn(metric, queries[i]).distance;
            rec.hit = rec.d_alg == rec.d_true;
            rec.triplets = a.triplets;
        }
    });
    double sum = 0.0;
    std::uint64_t used = 0;
    for (const PerQueryRecord& rec : report.records) {
        if (rec.d_true == 0.0) {
            ++report.excluded;
            continue;
        }
        sum += rec.d_alg / rec.d_true - 1.0;
        ++used;
    }
    if (used > 0) report.mean = sum / static_cast<double>(used);
    return report;
}

struct BenchRow {
    std::string dataset;
    std::string method;
    std::optional<std::uint32_t> n0;
    std::uint64_t seed = 0;
    std::optional<double> miss_probability;
    std::optional<double> relative_distance_error;
    std::uint64_t excluded_zero_distance_queries = 0;
    std::optional<std::uint64_t> build_triplets;
    std::optional<double> mean_query_triplets;
    std::optional<std::uint64_t> max_query_triplets;
    std::optional<std::uint32_t> tree_height;
    double wall_time_build = 0.0;
    double wall_time_query = 0.0;
};

inline constexpr const char* kBenchSchemaHeader = "# triplet-nn bench v1";
inline constexpr const char* kBenchColumns =
    "dataset,method,n0,seed,miss_probability,relative_distance_error,"
    "excluded_zero_distance_queries,build_triplets,mean_query_triplets,max_query_triplets,"
    "tree_height,wall_time_build,wall_time_query";

inline void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << kBenchSchemaHeader << '\n' << kBenchColumns << '\n';
    for (const BenchRow& r : rows) {
        out << r.dataset << ',' << r.method << ',';
        if (r.n0) out << *r.n0;
        out << ',' << format_u64(r.seed) << ',';
        if (r.miss_probability) out << format_double(*r.miss_probability);
        out << ',';
        if (r.relative_distance_error) out << format_double(*r.relative_distance_error);
        out << ',' << format_u64(r.excluded_zero_distance_queries) << ',';
        if (r.build_triplets) out << format_u64(*r.build_triplets);
        out << ',';
        if (r.mean_query_triplets) out << format_double(*r.mean_query_triplets);
        out << ',';
        if (r.max_query_triplets) out << format_u64(*r.max_query_triplets);
        out << ',';
        if (r.tree_height) out << *r.tree_height;
        out << ',' << format_double(r.wall_time_build) << ',' << format_double(r.wall_time_query)
            << '\n';
    }
}

inline nlohmann::json bench_rows_to_json(const std::vector<BenchRow>& rows) {
    nlohmann::json j;
    j["format"] = "tnn-bench";
    j["version"] = 1;
    nlohmann::json arr = nlohmann::json::array();
    for (const BenchRow& r : rows) {
        nlohmann::json o;
        o["dataset"] = r.dataset;
        o["method"] = r.method;
        o["n0"] = r.n0 ? nlohmann::json(*r.n0) : nlohmann::json(nullptr);
        o["seed"] = r.seed;
        o["miss_probability"] =
            r.miss_probability ? nlohmann::json(*r.miss_probability) : nlohmann::json(nullptr);
        o["relative_distance_error"] = r.relative_distance_error
                                           ? nlohmann::json(*r.relative_distance_error)
                                           : nlohmann::json(nullptr);
        o["excluded_zero_distance_queries"] = r.excluded_zero_distance_queries;
        o["build_triplets"] =
            r.build_triplets ? nlohmann::json(*r.build_triplets) : nlohmann::json(nullptr);
        o["mean_query_triplets"] =
            r.mean_query_triplets ? nlohmann::json(*r.mean_query_triplets) : nlohmann::json(nullptr);
        o["max_query_triplets"] =
            r.max_query_triplets ? nlohmann::json(*r.max_query_triplets) : nlohmann::json(nullptr);
        o["tree_height"] = r.tree_height ? nlohmann::json(*r.tree_height) : nlohmann::json(nullptr);
        o["wall_time_build"] = r.wall_time_build;
        o["wall_time_query"] = r.wall_time_query;
        arr.push_back(std::move(o));
    }
    j["rows"] = std::move(arr);
    return j;
}

/// Parses a bench CSV back into rows (round-trip of write_bench_csv).
inline std::vector<BenchRow> parse_bench_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kBenchSchemaHeader)
        throw DataError("bench CSV: missing schema header line");
    if (!std::getline(in, line) || line != kBenchColumns)
        throw DataError("bench CSV: missing column header line");
    std::vector<BenchRow> rows;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_fields(line);
        if (fields.size() != 13)
            throw DataError("bench CSV line " + std::to_string(line_no) + ": expected 13 fields");
        auto opt_u64 = [&](std::string_view f) -> std::optional<std::uint64_t> {
            if (f.empty()) return std::nullopt;
            std::uint64_t v = 0;
            const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size())
                throw DataError("bench CSV line " + std::to_string(line_no) + ": bad integer");
            return v;
        };
        auto opt_f64 = [&](std::string_view f) -> std::optional<double> {
            if (f.empty()) return std::nullopt;
            return detail::parse_double_field(f, line_no);
        };
        BenchRow r;
        r.dataset = std::string(fields[0]);
        r.method = std::string(fields[1]);
        if (auto v = opt_u64(fields[2])) r.n0 = static_cast<std::uint32_t>(*v);
        r.seed = opt_u64(fields[3]).value_or(0);
        r.miss_probability = opt_f64(fields[4]);
        r.relative_distance_error = opt_f64(fields[5]);
        r.excluded_zero_distance_queries = opt_u64(fields[6]).value_or(0);
        r.build_triplets = opt_u64(fields[7]);
        r.mean_query_triplets = opt_f64(fields[8]);
        r.max_query_triplets = opt_u64(fields[9]);
        if (auto v = opt_u64(fields[10])) r.tree_height = static_cast<std::uint32_t>(*v);
        r.wall_time_build = opt_f64(fields[11]).value_or(0.0);
        r.wall_time_query = opt_f64(fields[12]).value_or(0.0);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct RowAggregates {
    std::optional<double> miss;
    std::optional<double> rde;
    std::uint64_t excluded = 0;
    std::optional<double> mean_triplets;
    std::optional<std::uint64_t> max_triplets;
};

inline RowAggregates aggregate_records(const std::vector<PerQueryRecord>& records) {
    RowAggregates agg;
    if (records.empty()) return agg;
    std::uint64_t misses = 0, rde_used = 0, triplet_sum = 0;
    double rde_sum = 0.0;
    std::uint64_t triplet_max = 0;
    bool have_triplets = true;
    for (const PerQueryRecord& rec : records) {
        if (!rec.hit) ++misses;
        if (rec.d_true == 0.0) {
            ++agg.excluded;
        } else {
            rde_sum += rec.d_alg / rec.d_true - 1.0;
            ++rde_used;
        }
        if (rec.triplets) {
            triplet_sum += *rec.triplets;
            triplet_max = std::max(triplet_max, *rec.triplets);
        } else {
            have_triplets = false;
        }
    }
    agg.miss = static_cast<double>(misses) / static_cast<double>(records.size());
    if (rde_used > 0) agg.rde = rde_sum / static_cast<double>(rde_used);
    if (have_triplets) {
        agg.mean_triplets = static_cast<double>(triplet_sum) / static_cast<double>(records.size());
        agg.max_triplets = triplet_max;
    }
    return agg;
}

} // namespace detail

/// Runs one (method, n0, seed) cell of the protocol and fills a row.
inline BenchRow run_bench_cell(const BenchConfig& cfg, const Dataset& ds,
                               const MetricEvaluator& metric, Method method,
                               std::optional<std::uint32_t> n0, std::uint64_t seed,
                               const std::vector<double>* loo_true, unsigned threads) {
    BenchRow row;
    row.dataset = cfg.dataset_label;
    row.method = to_string(method);
    row.n0 = n0;
    row.seed = seed;

    if (cfg.mode == BenchMode::LeaveOneOut) {
        const auto t0 = std::chrono::steady_clock::now();
        const BuiltIndex index = BuiltIndex::build(method, ds, metric, n0.value_or(1), seed);
        row.wall_time_build = detail::seconds_since(t0);

        std::optional<std::vector<PointId>> capped;
        if (cfg.loo_query_cap > 0 && cfg.loo_query_cap < ds.size())
            capped = sample_point_ids(ds.size(), cfg.loo_query_cap, derive_stream(seed, 0x100u));
        const auto t1 = std::chrono::steady_clock::now();
        const LooReport loo = leave_one_out_error(index, ds, *loo_true,
                                                  capped ? &*capped : nullptr, threads);
        row.wall_time_query = detail::seconds_since(t1);

        const detail::RowAggregates agg = detail::aggregate_records(loo.records);
        row.miss_probability = agg.miss;
        row.relative_distance_error = agg.rde;
        row.excluded_zero_distance_queries = agg.excluded;
        row.build_triplets = index.build_triplets();
        row.mean_query_triplets = agg.mean_triplets;
        row.max_query_triplets = agg.max_triplets;
        row.tree_height = index.height();

        if (method == Method::CompTree && !index.has_frozen_leaves()) {
            // Corollary: build <= n*h, every query <= h + n0 - 1.
            const std::uint64_t h = *row.tree_height;
            if (*row.build_triplets > ds.size() * h)
                throw std::logic_error("construction triplet budget violated");
            if (*row.max_query_triplets > h + *n0 - 1)
                throw std::logic_error("query triplet budget violated");
        }
        return row;
    }

    // Holdout: sample the test set with the row seed, index the rest.
    if (cfg.holdout_size >= ds.size())
        throw ConfigError("holdout_size must be smaller than the dataset size");
    const std::vector<PointId> held =
        sample_point_ids(ds.size(), cfg.holdout_size, derive_stream(seed, 0x0d0u));
    std::vector<char> is_held(ds.size(), 0);
    for (PointId p : held) is_held[p] = 1;
    std::vector<PointId> kept;
    kept.reserve(ds.size() - held.size());
    for (PointId p = 0; p < ds.size(); ++p)
        if (!is_held[p]) kept.push_back(p);

    const Dataset index_set = ds.subset(kept);
    const MetricEvaluator index_metric(index_set, cfg.graph_cache_limit);
    std::vector<Query> queries;
    queries.reserve(held.size());
    for (PointId p : held) queries.push_back(Query::payload_of(ds, p));

    const auto t0 = std::chrono::steady_clock::now();
    const BuiltIndex index = BuiltIndex::build(method, index_set, index_metric, n0.value_or(1), seed);
    row.wall_time_build = detail::seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const RdeReport rde = relative_distance_error(index, index_metric, queries, threads);
    row.wall_time_query = detail::seconds_since(t1);

    const detail::RowAggregates agg = detail::aggregate_records(rde.records);
    row.miss_probability = agg.miss;
    row.relative_distance_error = agg.rde;
    row.excluded_zero_distance_queries = agg.excluded;
    row.build_triplets = index.build_triplets();
    row.mean_query_triplets = agg.mean_triplets;
    row.max_query_triplets = agg.max_triplets;
    row.tree_height = index.height();
    return row;
}

struct BenchRun {
    std::vector<BenchRow> rows;
    std::string csv_path;
    std::string json_path;
};

/// One row per (method, n0, seed) in config order; brute ignores n0.
/// Rerunning a config reproduces all rows bit-for-bit except the wall-time
/// columns; the parallel flag never changes emitted values.
inline std::vector<BenchRow> compute_bench_rows(const BenchConfig& cfg, const Dataset& ds) {
    const MetricEvaluator metric(ds, cfg.graph_cache_limit);
    unsigned threads = 1;
    if (cfg.parallel) {
        threads = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
        if (threads == 0) threads = 4;
    }
    std::vector<double> loo_true;
    if (cfg.mode == BenchMode::LeaveOneOut)
        loo_true = loo_true_distances(ds, metric, threads);
    std::vector<BenchRow> rows;
    for (Method method : cfg.methods) {
        if (method == Method::Brute) {
            for (std::uint64_t seed : cfg.seeds)
                rows.push_back(run_bench_cell(cfg, ds, metric, method, std::nullopt, seed,
                                              &loo_true, threads));
            continue;
        }
        for (std::uint32_t n0 : cfg.n0_list)
            for (std::uint64_t seed : cfg.seeds)
                rows.push_back(
                    run_bench_cell(cfg, ds, metric, method, n0, seed, &loo_true, threads));
    }
    return rows;
}

inline BenchRun run_benchmark(const BenchConfig& cfg) {
    const Dataset ds = load_bench_dataset(cfg);
    BenchRun run;
    run.rows = compute_bench_rows(cfg, ds);
    run.csv_path = cfg.output + ".csv";
    run.json_path = cfg.output + ".json";
    {
        std::ofstream out(run.csv_path);
        if (!out) throw DataError("cannot write " + run.csv_path);
        write_bench_csv(run.rows, out);
    }
    {
        std::ofstream out(run.json_path);
        if (!out) throw DataError("cannot write " + run.json_path);
        out << bench_rows_to_json(run.rows).dump(2) << '\n';
    }
    return run;
}

} // namespace tnn

#endif // TNN_BENCH_HPP
