#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <thread>

using namespace tnn;
using namespace tnn_test;

namespace {

Dataset triangle_graph() {
    // 0-1 w=2, 1-2 w=3, 0-2 w=10: d(0,2) is forced through 0-1-2.
    std::vector<std::uint64_t> us{0, 1, 0};
    std::vector<std::uint64_t> vs{1, 2, 2};
    std::vector<double> ws{2, 3, 10};
    auto graph = std::make_shared<const WeightedGraph>(us, vs, ws);
    auto lcc = graph->largest_component();
    return Dataset::graph_points(std::move(graph), std::move(lcc));
}

std::string write_temp(const std::string& name, const std::string& body) {
    const std::string path = std::string("tnn_test_") + name;
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_CASE("euclidean distance: (0,0) to (3,4) is 5") {
    const Dataset ds = Dataset::dense_vectors(2, {0, 0, 3, 4});
    const MetricEvaluator metric(ds);
    REQUIRE(metric.between(0, 1) == 5.0);
    REQUIRE(metric.between(1, 0) == 5.0);
    REQUIRE(metric.between(0, 0) == 0.0);
}

TEST_CASE("mismatch distance counts differing coordinates") {
    const Dataset ds = Dataset::categorical(3, {"1", "2", "3", "1", "5", "3"});
    const MetricEvaluator metric(ds);
    REQUIRE(metric.between(0, 1) == 1.0);
    REQUIRE(metric.between(0, 0) == 0.0);
}

TEST_CASE("graph distance follows the shortest path") {
    const Dataset ds = triangle_graph();
    const MetricEvaluator metric(ds);
    // points are LCC nodes ascending by name: 0, 1, 2
    REQUIRE(metric.between(0, 2) == 5.0);
    REQUIRE(metric.between(0, 1) == 2.0);
    REQUIRE(metric.between(1, 2) == 3.0);
}

TEST_CASE("metric axioms hold on sampled triples for every kind") {
    struct Case {
        Dataset ds;
        double tol;
    };
    std::vector<Case> cases;
    cases.push_back({random_vector_dataset(60, 4, 7), 1e-9});
    cases.push_back({random_categorical_dataset(60, 5, 3, 8), 0.0});
    cases.push_back({random_graph_dataset(60, 40, 9), 1e-9});

    for (const Case& c : cases) {
        const MetricEvaluator metric(c.ds);
        SplitMix64 g(123);
        const std::size_t n = c.ds.size();
        for (int t = 0; t < 1000; ++t) {
            const PointId x = static_cast<PointId>(g.below(n));
            const PointId y = static_cast<PointId>(g.below(n));
            const PointId z = static_cast<PointId>(g.below(n));
            const double dxy = metric.between(x, y);
            const double dyx = metric.between(y, x);
            const double dxz = metric.between(x, z);
            const double dyz = metric.between(y, z);
            REQUIRE(dxy == dyx);
            REQUIRE(dxy >= 0.0);
            REQUIRE(metric.between(x, x) == 0.0);
            const double slack = c.tol * (dxy + dyz + 1.0);
            REQUIRE(dxz <= dxy + dyz + slack);
        }
    }
}

TEST_CASE("identity of indiscernibles for distinct dense payloads") {
    const Dataset ds = random_vector_dataset(50, 3, 11);
    const MetricEvaluator metric(ds);
    for (PointId a = 0; a < ds.size(); ++a)
        for (PointId b = a + 1; b < ds.size(); ++b)
            if (!metric.same_payload(a, b)) REQUIRE(metric.between(a, b) > 0.0);
}

TEST_CASE("triplet query answers d(x,y) <= d(x,z) and counts exactly") {
    const Dataset ds = line_dataset({0, 1, 5, 2, -2});
    const MetricEvaluator metric(ds);
    TripletOracle oracle(metric);
    REQUIRE(oracle.triplet(PointId{0}, PointId{1}, PointId{2}) == Closer::ToY);
    // tie: x=0, y=2, z=-2, both at distance 2 -> ToY by the "<=" convention
    REQUIRE(oracle.triplet(PointId{0}, PointId{3}, PointId{4}) == Closer::ToY);
    REQUIRE(oracle.triplet(PointId{0}, PointId{2}, PointId{1}) == Closer::ToZ);

    TripletOracle counted(metric);
    for (int i = 0; i < 7; ++i) counted.triplet(PointId{0}, PointId{1}, PointId{2});
    REQUIRE(counted.comparisons() == 7);
    counted.triplet(PointId{0}, PointId{1}, PointId{2});
    REQUIRE(counted.comparisons() == 8);
}

TEST_CASE("triplet answers agree with raw distances on sampled triples") {
    const Dataset ds = random_vector_dataset(40, 2, 21);
    const MetricEvaluator metric(ds);
    TripletOracle oracle(metric);
    SplitMix64 g(5);
    for (int t = 0; t < 500; ++t) {
        const PointId x = static_cast<PointId>(g.below(ds.size()));
        const PointId y = static_cast<PointId>(g.below(ds.size()));
        const PointId z = static_cast<PointId>(g.below(ds.size()));
        const bool closer = oracle.triplet(x, y, z) == Closer::ToY;
        REQUIRE(closer == (metric.between(x, y) <= metric.between(x, z)));
    }
}

TEST_CASE("oracle counter is exact under concurrent callers") {
    const Dataset ds = random_vector_dataset(16, 2, 3);
    const MetricEvaluator metric(ds);
    TripletOracle oracle(metric);
    constexpr int kThreads = 4;
    constexpr int kCalls = 20000;
    std::vector<std::thread> pool;
    for (int t = 0; t < kThreads; ++t)
        pool.emplace_back([&oracle] {
            for (int i = 0; i < kCalls; ++i) oracle.triplet(PointId{0}, PointId{1}, PointId{2});
        });
    for (auto& th : pool) th.join();
    REQUIRE(oracle.comparisons() == static_cast<std::uint64_t>(kThreads) * kCalls);
}

TEST_CASE("brute force returns the minimizer with smallest-id ties") {
    const Dataset ds = line_dataset({3, 7, 20});
    const MetricEvaluator metric(ds);
    const NnResult r = brute_force_nn(metric, Query::vector({8}));
    REQUIRE(r.best == 1);
    REQUIRE(r.distance == 1.0);

    const Dataset dup = line_dataset({0, 4, 4});
    const MetricEvaluator dup_metric(dup);
    const NnResult rd = brute_force_nn(dup_metric, Query::vector({5}));
    REQUIRE(rd.best == 1);
    REQUIRE(rd.minimizers == std::vector<PointId>{1, 2});
}

TEST_CASE("brute force on a graph subset") {
    const Dataset lcc = triangle_graph();
    const Dataset ds = lcc.subset({1, 2}); // points are nodes 1 and 2
    const MetricEvaluator metric(ds);
    const NnResult r = brute_force_nn(metric, Query::graph_node(0));
    REQUIRE(r.best == 0);
    REQUIRE(r.distance == 2.0);
}

TEST_CASE("brute force errors on an empty candidate set") {
    const Dataset ds = line_dataset({42});
    const MetricEvaluator metric(ds);
    REQUIRE_THROWS_AS(brute_force_nn(metric, Query::member(0), PointId{0}), DataError);
}

TEST_CASE("vector CSV loader honors the header flag and reports bad rows") {
    const std::string path = write_temp("vec.csv", "x,y\n1,2\n3,4\n");
    const Dataset ds = load_vector_csv(path, true);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.dim() == 2);
    REQUIRE(ds.vector_at(1)[1] == 4.0);
    REQUIRE_THROWS_AS(load_vector_csv(path, false), DataError);

    const std::string bad = write_temp("bad.csv", "1,2\n3,4\n5,oops\n");
    try {
        load_vector_csv(bad);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("categorical CSV loader trims tokens") {
    const std::string path = write_temp("cat.csv", "a, b ,c\na,b,d\n");
    const Dataset ds = load_categorical_csv(path);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.arity() == 3);
    const MetricEvaluator metric(ds);
    REQUIRE(metric.between(0, 1) == 1.0);
}

TEST_CASE("graph loader takes absolute weights and the largest component") {
    const std::string path = write_temp(
        "graph.txt", "# two components\n0 1 -2\n1 2 3\n0 2 10\n7 8\n");
    const Dataset ds = load_graph_edges(path);
    REQUIRE(ds.size() == 3); // {0,1,2} beats {7,8}
    const MetricEvaluator metric(ds);
    REQUIRE(metric.between(0, 1) == 2.0); // |-2|
    REQUIRE(metric.between(0, 2) == 5.0);

    const std::string zero = write_temp("zero.txt", "0 1 0\n");
    REQUIRE_THROWS_AS(load_graph_edges(zero), DataError);

    const std::string defw = write_temp("defw.txt", "0 1\n1 2\n");
    const Dataset unit = load_graph_edges(defw);
    const MetricEvaluator unit_metric(unit);
    REQUIRE(unit_metric.between(0, 2) == 2.0); // default weight 1
}

TEST_CASE("graph queries must name an existing node") {
    const Dataset ds = triangle_graph();
    const MetricEvaluator metric(ds);
    REQUIRE_THROWS_AS(metric.to_query(Query::graph_node(99), 0), DataError);
}

TEST_CASE("query arity must match the dataset") {
    const Dataset ds = random_vector_dataset(4, 3, 1);
    const MetricEvaluator metric(ds);
    REQUIRE_THROWS_AS(metric.to_query(Query::vector({1.0, 2.0}), 0), DataError);
    const Dataset cat = random_categorical_dataset(4, 2, 3, 1);
    const MetricEvaluator cat_metric(cat);
    REQUIRE_THROWS_AS(cat_metric.to_query(Query::categorical({"a"}), 0), DataError);
}

TEST_CASE("same_payload detects duplicates in every kind") {
    const Dataset vec = Dataset::dense_vectors(2, {1, 2, 1, 2, 3, 4});
    REQUIRE(MetricEvaluator(vec).same_payload(0, 1));
    REQUIRE_FALSE(MetricEvaluator(vec).same_payload(0, 2));

    const Dataset cat = Dataset::categorical(2, {"a", "b", "a", "b", "a", "c"});
    REQUIRE(MetricEvaluator(cat).same_payload(0, 1));
    REQUIRE_FALSE(MetricEvaluator(cat).same_payload(0, 2));

    const Dataset g = triangle_graph();
    REQUIRE(MetricEvaluator(g).same_payload(1, 1));
    REQUIRE_FALSE(MetricEvaluator(g).same_payload(0, 1));
}
