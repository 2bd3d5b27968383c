// Command-line front end: benchmark runs, dataset generation, tree
// build/stats/search, and the theory calculators.

#include <tnn/tnn.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct DatasetArgs {
    std::string path;
    std::string format = "vector-csv";
    bool header = false;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
    cmd->add_option("--dataset", args.path, "dataset file")->required();
    cmd->add_option("--format", args.format,
                    "dataset format: vector-csv | categorical-csv | graph-edges");
    cmd->add_flag("--header", args.header, "skip one header line (CSV formats)");
}

tnn::Dataset load_dataset(const DatasetArgs& args) {
    switch (tnn::parse_data_format(args.format)) {
        case tnn::DataFormat::VectorCsv: return tnn::load_vector_csv(args.path, args.header);
        case tnn::DataFormat::CategoricalCsv:
            return tnn::load_categorical_csv(args.path, args.header);
        case tnn::DataFormat::GraphEdges: return tnn::load_graph_edges(args.path);
    }
    throw tnn::ConfigError("corrupt dataset format");
}

tnn::Query parse_query_payload(const tnn::Dataset& ds, const std::string& text) {
    switch (ds.kind()) {
        case tnn::DatasetKind::DenseVector: {
            std::vector<double> coords;
            for (const std::string& item : tnn::detail::split_list(text))
                coords.push_back(tnn::detail::parse_double_field(item, 0));
            if (coords.size() != ds.dim())
                throw tnn::ConfigError("query needs " + std::to_string(ds.dim()) + " coordinates");
            return tnn::Query::vector(std::move(coords));
        }
        case tnn::DatasetKind::CategoricalTuple: {
            std::vector<std::string> tokens = tnn::detail::split_list(text);
            if (tokens.size() != ds.arity())
                throw tnn::ConfigError("query needs " + std::to_string(ds.arity()) + " tokens");
            return tnn::Query::categorical(std::move(tokens));
        }
        case tnn::DatasetKind::GraphNode:
            return tnn::Query::graph_node(
                tnn::detail::parse_integer<std::uint64_t>(text, "query"));
    }
    throw tnn::ConfigError("corrupt dataset kind");
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw tnn::DataError("cannot write " + path);
    out << body;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"comparison-based nearest neighbor search benchmark"};
    app.require_subcommand(1);

    // --- bench ---
    CLI::App* bench = app.add_subcommand("bench", "benchmark protocols");
    bench->require_subcommand(1);

    {
        auto* run = bench->add_subcommand("run", "run a benchmark config");
        auto config_path = std::make_shared<std::string>();
        auto force_parallel = std::make_shared<int>(-1);
        run->add_option("--config", *config_path, "flat key-value config file")->required();
        run->add_flag_callback("--parallel", [force_parallel] { *force_parallel = 1; },
                               "override config: evaluate queries in parallel");
        run->add_flag_callback("--sequential", [force_parallel] { *force_parallel = 0; },
                               "override config: evaluate queries sequentially");
        run->callback([config_path, force_parallel] {
            tnn::BenchConfig cfg = tnn::load_bench_config(*config_path);
            if (*force_parallel >= 0) cfg.parallel = *force_parallel == 1;
            const tnn::BenchRun result = tnn::run_benchmark(cfg);
            std::cout << "wrote " << result.csv_path << " and " << result.json_path << " ("
                      << result.rows.size() << " rows)\n";
        });
    }
    {
        auto* gen = bench->add_subcommand("gen", "generate a synthetic dataset");
        auto kind = std::make_shared<std::string>();
        auto n = std::make_shared<std::size_t>(0);
        auto dim = std::make_shared<std::size_t>(1);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out_path = std::make_shared<std::string>();
        gen->add_option("--kind", *kind,
                        "uniform-cube | gaussian-mixture | line-grid | grid-2d")
            ->required();
        gen->add_option("--n", *n, "number of points")->required();
        gen->add_option("--dim", *dim, "dimension (line-grid: 1, grid-2d: 2)");
        gen->add_option("--seed", *seed, "RNG seed");
        gen->add_option("--out", *out_path, "output CSV path")->required();
        gen->callback([kind, n, dim, seed, out_path] {
            const tnn::Dataset ds =
                tnn::generate_synthetic(tnn::parse_synthetic_kind(*kind), *n, *dim, *seed);
            std::ofstream out(*out_path);
            if (!out) throw tnn::DataError("cannot write " + *out_path);
            tnn::write_vector_csv(ds, out);
            std::cout << "wrote " << *out_path << " (" << ds.size() << " x " << ds.dim() << ")\n";
        });
    }

    // --- tree ---
    CLI::App* tree = app.add_subcommand("tree", "build, inspect, and query trees");
    tree->require_subcommand(1);

    {
        auto* build = tree->add_subcommand("build", "build a tree and save it");
        auto ds_args = std::make_shared<DatasetArgs>();
        auto method = std::make_shared<std::string>("comptree");
        auto n0 = std::make_shared<std::uint32_t>(1);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out_path = std::make_shared<std::string>();
        add_dataset_options(build, *ds_args);
        build->add_option("--method", *method, "comptree | kdtree | rptree | patree");
        build->add_option("--n0", *n0, "maximum leaf size")->required();
        build->add_option("--seed", *seed, "RNG seed (comptree, rptree)");
        build->add_option("--out", *out_path, "output tree file")->required();
        build->callback([ds_args, method, n0, seed, out_path] {
            const tnn::Dataset ds = load_dataset(*ds_args);
            const tnn::Method m = tnn::parse_method(*method);
            if (m == tnn::Method::Brute) throw tnn::ConfigError("brute has no tree to build");
            nlohmann::json j;
            if (m == tnn::Method::CompTree) {
                const tnn::MetricEvaluator metric(ds);
                tnn::TripletOracle oracle(metric);
                const tnn::CompTree t = tnn::build_comptree(ds, *n0, *seed, oracle);
                j = tnn::comptree_to_json(t);
                std::cout << "built comptree: height " << t.height() << ", "
                          << t.build_triplets() << " triplets\n";
            } else {
                tnn::AxisSplitTree t = m == tnn::Method::KdTree ? tnn::build_kdtree(ds, *n0)
                                       : m == tnn::Method::RpTree
                                           ? tnn::build_rptree(ds, *n0, *seed)
                                           : tnn::build_patree(ds, *n0);
                j = tnn::axis_tree_to_json(t);
                std::cout << "built " << *method << ": height " << t.height() << "\n";
            }
            write_text_file(*out_path, j.dump(2) + "\n");
        });
    }
    {
        auto* stats = tree->add_subcommand("stats", "print stats of a saved tree");
        auto tree_path = std::make_shared<std::string>();
        stats->add_option("--tree", *tree_path, "tree file")->required();
        stats->callback([tree_path] {
            std::ifstream in(*tree_path);
            if (!in) throw tnn::DataError("cannot open tree file " + *tree_path);
            nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_discarded()) throw tnn::DataError("tree file is not valid JSON");
            nlohmann::json out;
            if (j.value("method", "") == "comptree") {
                const tnn::CompTree t = tnn::comptree_from_json(j);
                const tnn::TreeStats s = tnn::tree_stats(t);
                out["method"] = "comptree";
                out["n"] = t.size();
                out["n0"] = t.n0();
                out["seed"] = t.seed();
                out["height"] = s.height;
                out["build_triplets"] = s.build_triplets;
                out["duplicate_probes"] = s.duplicate_probes;
                out["leaf_count"] = s.leaf_count;
                out["frozen_leaf_count"] = s.frozen_leaf_count;
                nlohmann::json hist = nlohmann::json::object();
                for (const auto& [size, count] : s.leaf_size_histogram)
                    hist[std::to_string(size)] = count;
                out["leaf_size_histogram"] = std::move(hist);
                out["nodes_per_depth"] = s.nodes_per_depth;
            } else {
                const tnn::AxisSplitTree t = tnn::axis_tree_from_json(j);
                out["method"] = to_string(t.method());
                out["n"] = t.size();
                out["n0"] = t.n0();
                out["seed"] = t.seed();
                out["height"] = t.height();
                std::size_t leaves = 0, frozen = 0;
                for (const auto& node : t.nodes()) {
                    if (node.is_leaf()) ++leaves;
                    if (node.frozen) ++frozen;
                }
                out["leaf_count"] = leaves;
                out["frozen_leaf_count"] = frozen;
            }
            std::cout << out.dump(2) << "\n";
        });
    }
    {
        auto* search = tree->add_subcommand("search", "query a saved tree");
        auto ds_args = std::make_shared<DatasetArgs>();
        auto tree_path = std::make_shared<std::string>();
        auto query_text = std::make_shared<std::string>();
        auto query_id = std::make_shared<std::int64_t>(-1);
        auto k = std::make_shared<std::size_t>(1);
        add_dataset_options(search, *ds_args);
        search->add_option("--tree", *tree_path, "tree file")->required();
        search->add_option("--query", *query_text,
                           "out-of-sample query payload (comma-separated coordinates or tokens; "
                           "a node id for graph datasets)");
        search->add_option("--query-id", *query_id,
                           "dataset point id; leave-one-out, excluded at the leaf scan");
        search->add_option("--k", *k, "return the k best leaf candidates");
        search->callback([ds_args, tree_path, query_text, query_id, k] {
            const tnn::Dataset ds = load_dataset(*ds_args);
            const tnn::MetricEvaluator metric(ds);
            std::ifstream in(*tree_path);
            if (!in) throw tnn::DataError("cannot open tree file " + *tree_path);
            nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_discarded()) throw tnn::DataError("tree file is not valid JSON");
            const bool has_id = *query_id >= 0;
            if (has_id == !query_text->empty())
                throw tnn::ConfigError("pass exactly one of --query or --query-id");
            std::optional<tnn::PointId> exclude;
            tnn::Query q = tnn::Query::member(0);
            if (has_id) {
                if (static_cast<std::size_t>(*query_id) >= ds.size())
                    throw tnn::ConfigError("--query-id out of range");
                q = tnn::Query::member(static_cast<tnn::PointId>(*query_id));
                exclude = static_cast<tnn::PointId>(*query_id);
            } else {
                q = parse_query_payload(ds, *query_text);
            }
            nlohmann::json out;
            if (j.value("method", "") == "comptree") {
                const tnn::CompTree t = tnn::comptree_from_json(j);
                if (t.dataset_fingerprint() != ds.fingerprint())
                    throw tnn::DataError("tree was built over a different dataset");
                tnn::TripletOracle oracle(metric);
                if (*k > 1) {
                    const tnn::CandidateReport r = tnn::leaf_candidates(t, q, oracle, *k, exclude);
                    out["neighbors"] = r.neighbors;
                    out["distances"] = nlohmann::json::array();
                    for (tnn::PointId p : r.neighbors)
                        out["distances"].push_back(metric.to_query(q, p));
                    out["triplets_used"] = r.triplets_used;
                    out["leaf_depth"] = r.leaf_depth;
                    out["leaf_size"] = r.leaf_size;
                    out["used_sibling_fallback"] = r.used_sibling_fallback;
                } else {
                    const tnn::SearchReport r = tnn::nn_search(t, q, oracle, exclude);
                    out["neighbor"] = r.neighbor;
                    out["distance"] = metric.to_query(q, r.neighbor);
                    out["triplets_used"] = r.triplets_used;
                    out["leaf_depth"] = r.leaf_depth;
                    out["leaf_size"] = r.leaf_size;
                    out["used_sibling_fallback"] = r.used_sibling_fallback;
                }
            } else {
                const tnn::AxisSplitTree t = tnn::axis_tree_from_json(j);
                if (t.dataset_fingerprint() != ds.fingerprint())
                    throw tnn::DataError("tree was built over a different dataset");
                const double* qv = q.is_member() ? ds.vector_at(q.member_id())
                                                 : q.vector_payload()->data();
                const tnn::DefeatistReport r =
                    tnn::defeatist_query(t, ds, {qv, ds.dim()}, exclude);
                out["neighbor"] = r.neighbor;
                out["distance"] = r.distance;
                out["leaf_depth"] = r.leaf_depth;
                out["leaf_size"] = r.leaf_size;
                out["used_sibling_fallback"] = r.used_sibling_fallback;
            }
            std::cout << out.dump(2) << "\n";
        });
    }

    // --- theory ---
    CLI::App* theory = app.add_subcommand("theory", "bound evaluators and estimators");
    theory->require_subcommand(1);

    {
        auto* bounds = theory->add_subcommand("bounds", "evaluate h*, budgets, and error bound");
        auto n = std::make_shared<double>(0);
        auto n0 = std::make_shared<double>(0);
        auto c_tilde = std::make_shared<double>(1);
        auto epsilon = std::make_shared<double>(0.05);
        auto C = std::make_shared<double>(0);
        auto alpha = std::make_shared<double>(0);
        bounds->add_option("--n", *n, "dataset size")->required();
        bounds->add_option("--n0", *n0, "maximum leaf size")->required();
        bounds->add_option("--c-tilde", *c_tilde, "strong expansion rate (>= 1)")->required();
        bounds->add_option("--epsilon", *epsilon, "failure probability (> 0)");
        auto* c_opt = bounds->add_option("--C", *C, "constant C of the query condition");
        auto* a_opt = bounds->add_option("--alpha", *alpha, "exponent alpha in (0,1]");
        c_opt->needs(a_opt);
        a_opt->needs(c_opt);
        bounds->callback([n, n0, c_tilde, epsilon, C, alpha, c_opt] {
            std::optional<double> Co, Ao;
            if (c_opt->count() > 0) {
                Co = *C;
                Ao = *alpha;
            }
            const tnn::BoundReport r = tnn::evaluate_bounds(*n, *n0, *c_tilde, *epsilon, Co, Ao);
            std::cout << tnn::bound_report_to_json(r).dump(2) << "\n";
        });
    }
    {
        auto* expansion = theory->add_subcommand(
            "expansion", "estimate empirical pointwise expansion rates c~(x)");
        auto ds_args = std::make_shared<DatasetArgs>();
        auto sample_cap = std::make_shared<std::size_t>(10000);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto threads = std::make_shared<unsigned>(1);
        auto csv_path = std::make_shared<std::string>();
        add_dataset_options(expansion, *ds_args);
        expansion->add_option("--sample-cap", *sample_cap, "max sampled points (default 10000)");
        expansion->add_option("--seed", *seed, "sampling seed");
        expansion->add_option("--threads", *threads, "worker threads");
        expansion->add_option("--csv", *csv_path, "also write a point_id,c_tilde CSV");
        expansion->callback([ds_args, sample_cap, seed, threads, csv_path] {
            const tnn::Dataset ds = load_dataset(*ds_args);
            const tnn::MetricEvaluator metric(ds);
            const std::vector<tnn::PointId> sample =
                tnn::sample_point_ids(ds.size(), *sample_cap, *seed);
            const tnn::ExpansionProfile profile =
                tnn::empirical_expansion_rate(ds, metric, sample, *threads);
            if (!csv_path->empty()) {
                std::ofstream out(*csv_path);
                if (!out) throw tnn::DataError("cannot write " + *csv_path);
                tnn::expansion_profile_to_csv(profile, out);
            }
            std::cout << tnn::expansion_profile_to_json(profile).dump(2) << "\n";
        });
    }
    {
        auto* lemma1 = theory->add_subcommand(
            "lemma1", "Monte Carlo estimate of the unbalanced-split probability");
        auto ds_args = std::make_shared<DatasetArgs>();
        auto delta = std::make_shared<std::vector<double>>();
        auto trials = std::make_shared<std::size_t>(10000);
        auto seed = std::make_shared<std::uint64_t>(0);
        add_dataset_options(lemma1, *ds_args);
        lemma1->add_option("--delta", *delta, "unbalance thresholds in (0,1)")->required();
        lemma1->add_option("--trials", *trials, "independent pivot draws per delta");
        lemma1->add_option("--seed", *seed, "RNG seed");
        lemma1->callback([ds_args, delta, trials, seed] {
            const tnn::Dataset ds = load_dataset(*ds_args);
            const tnn::MetricEvaluator metric(ds);
            std::vector<tnn::PointId> all(ds.size());
            for (std::size_t i = 0; i < ds.size(); ++i) all[i] = static_cast<tnn::PointId>(i);
            const tnn::ExpansionProfile profile = tnn::empirical_expansion_rate(
                ds, metric, tnn::sample_point_ids(ds.size(), 10000, *seed));
            nlohmann::json out;
            out["n"] = ds.size();
            out["trials"] = *trials;
            out["c_tilde_max"] = profile.dataset_max;
            nlohmann::json results = nlohmann::json::array();
            for (double d : *delta) {
                const double fraction = tnn::split_balance_trial(all, metric, d, *trials, *seed);
                nlohmann::json row;
                row["delta"] = d;
                row["unbalanced_fraction"] = fraction;
                row["lemma_bound"] = 4.0 * profile.dataset_max * profile.dataset_max * d;
                results.push_back(std::move(row));
            }
            out["results"] = std::move(results);
            std::cout << out.dump(2) << "\n";
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const tnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tnn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
