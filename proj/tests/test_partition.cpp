#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cipsm/partition.hpp"
#include "cipsm/rng.hpp"
#include "support/stats.hpp"

using namespace cipsm;

namespace {

// Graph with uniform node metrics so only delta_n binds unless stated.
CompetitionGraph make_graph(const std::vector<std::string>& ids, const std::vector<GraphEdge>& edges,
                            std::vector<NodeMetrics> metrics = {}) {
    if (metrics.empty()) {
        metrics.resize(ids.size());
        for (auto& m : metrics) {
            m.pv = 100;
            m.orders = 10;
            m.gmv = 100.0;
            m.price = 10.0;
            m.category_path = {"t", "m", "l"};
        }
    }
    return CompetitionGraph(ids, metrics, edges);
}

std::vector<std::string> ids_n(int n, const std::string& prefix = "n") {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i)
        ids.push_back(prefix + (i < 10 ? "0" : "") + std::to_string(i));
    return ids;
}

// Two dense blocks joined by a sparse bridge; the canonical clustered case.
CompetitionGraph two_block_graph(int block, double bridge_weight, std::uint64_t seed) {
    Rng rng(seed);
    const int n = 2 * block;
    std::vector<GraphEdge> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            const bool same = (u < block) == (v < block);
            if (same && rng.uniform() < 0.7) edges.push_back({u, v, rng.uniform(1.0, 2.0)});
        }
    edges.push_back({0, block, bridge_weight});
    edges.push_back({1, block + 1, bridge_weight});
    return make_graph(ids_n(n), edges);
}

BalanceConstraints loose() { return {0.6, 0.9, 0.9}; }

}  // namespace

TEST_CASE("brute_force_min_cut") {
    SECTION("empty edge set returns the lexicographically smallest feasible split") {
        const auto g = make_graph(ids_n(4), {});
        const auto p = brute_force_min_cut(g, {0.1, 0.9, 0.9});
        CHECK(p.cut_weight == 0.0);
        CHECK(p.side_a == std::vector<std::string>{"n00", "n01"});
        CHECK(p.side_b == std::vector<std::string>{"n02", "n03"});
    }

    SECTION("K4 with unit weights cuts 4") {
        const auto g = make_graph(ids_n(4), {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0},
                                             {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
        const auto p = brute_force_min_cut(g, {0.1, 0.9, 0.9});
        CHECK(p.cut_weight == 4.0);
    }

    SECTION("tight node balance forces a higher cut than the unbalanced optimum") {
        // Path n0-n1-n2-n3-n4-n5 with a heavy tail edge: the cheapest cut
        // ({n0} vs rest, weight 0.5) is too imbalanced under delta_n = 0.4.
        const auto g = make_graph(ids_n(6), {{0, 1, 0.5}, {1, 2, 3.0}, {2, 3, 1.0},
                                             {3, 4, 3.0}, {4, 5, 3.0}});
        const auto tight = brute_force_min_cut(g, {0.4, 0.9, 0.9});
        CHECK(tight.cut_weight == 1.0);  // {n0,n1,n2} vs {n3,n4,n5}
        const auto lax = brute_force_min_cut(g, {0.9, 0.9, 0.9});
        CHECK(lax.cut_weight == 0.5);
        CHECK(lax.cut_weight < tight.cut_weight);
    }

    SECTION("limits and infeasibility") {
        CHECK_THROWS_MATCHES(brute_force_min_cut(make_graph(ids_n(21), {}), loose()), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.code() == ErrorCode::too_large;
                             }));
        // Unbalanceable metrics: one node owns nearly all orders.
        std::vector<NodeMetrics> metrics(4);
        for (auto& m : metrics) {
            m.orders = 1;
            m.gmv = 1.0;
            m.price = 1.0;
            m.category_path = {"t", "m", "l"};
        }
        metrics[0].orders = 1000;
        const auto g = make_graph(ids_n(4), {}, metrics);
        CHECK_THROWS_MATCHES(brute_force_min_cut(g, {0.5, 0.05, 0.99}), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.code() == ErrorCode::infeasible_constraints;
                             }));
    }
}

TEST_CASE("kl_partition basics") {
    SECTION("two disconnected equal cliques split at zero cut") {
        std::vector<GraphEdge> edges;
        for (int u = 0; u < 4; ++u)
            for (int v = u + 1; v < 4; ++v) edges.push_back({u, v, 1.0});
        for (int u = 4; u < 8; ++u)
            for (int v = u + 1; v < 8; ++v) edges.push_back({u, v, 1.0});
        const auto g = make_graph(ids_n(8), edges);
        const auto p = kl_partition(g, {0.1, 0.9, 0.9}, 3);
        CHECK(p.cut_weight == 0.0);
        // Each clique intact on one side.
        const std::set<std::string> a(p.side_a.begin(), p.side_a.end());
        CHECK((a == std::set<std::string>{"n00", "n01", "n02", "n03"} ||
               a == std::set<std::string>{"n04", "n05", "n06", "n07"}));
    }

    SECTION("4-node path cuts the middle edge") {
        // a-b-c-d unit path; brute force over the 3 balanced bipartitions
        // gives cut 1 ({a,b} vs {c,d}).
        const auto g = make_graph(ids_n(4), {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
        const auto oracle = brute_force_min_cut(g, {0.1, 0.9, 0.9});
        REQUIRE(oracle.cut_weight == 1.0);
        REQUIRE(oracle.side_a == std::vector<std::string>{"n00", "n01"});
        const auto p = kl_partition(g, {0.1, 0.9, 0.9}, 5);
        CHECK(p.cut_weight == 1.0);
        CHECK(p.side_a == oracle.side_a);
    }

    SECTION("single node is infeasible") {
        const auto g = make_graph({"solo"}, {});
        CHECK_THROWS_MATCHES(kl_partition(g, loose(), 1), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.code() == ErrorCode::infeasible_constraints;
                             }));
    }

    SECTION("fixed seed reproduces the partition exactly") {
        const auto g = two_block_graph(10, 0.2, 77);
        const auto p1 = kl_partition(g, loose(), 42);
        const auto p2 = kl_partition(g, loose(), 42);
        CHECK(p1.side_a == p2.side_a);
        CHECK(p1.side_b == p2.side_b);
        CHECK(p1.cut_weight == p2.cut_weight);
    }
}

TEST_CASE("kl_partition invariants") {
    SECTION("output always satisfies the balance constraints") {
        Rng rng(5);
        for (int rep = 0; rep < 25; ++rep) {
            const int n = 6 + static_cast<int>(rng.below(10));
            std::vector<GraphEdge> edges;
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v)
                    if (rng.uniform() < 0.3) edges.push_back({u, v, rng.uniform(0.1, 4.0)});
            std::vector<NodeMetrics> metrics(static_cast<std::size_t>(n));
            for (auto& m : metrics) {
                m.orders = 5 + static_cast<std::int64_t>(rng.below(20));
                m.gmv = rng.uniform(10.0, 200.0);
                m.price = rng.uniform(1.0, 40.0);
                m.category_path = {"t", "m", "l"};
            }
            const auto g = make_graph(ids_n(n), edges, metrics);
            const BalanceConstraints c{0.34, 0.5, 0.6};
            Partition p;
            try {
                p = kl_partition(g, c, 100 + static_cast<std::uint64_t>(rep));
            } catch (const Error& e) {
                REQUIRE(e.code() == ErrorCode::infeasible_constraints);
                continue;
            }
            CHECK(p.balance.node <= c.delta_n);
            CHECK(p.balance.order <= c.delta_p);
            CHECK(p.balance.gmv <= c.delta_g);
            // cut_weight matches a recount.
            const double recount = crossing_weight(g, partition_assignment(g, p));
            CHECK(p.cut_weight == recount);
        }
    }

    SECTION("per-pass cut weights never increase") {
        const auto g = two_block_graph(12, 0.3, 9);
        KlDiagnostics diag;
        const auto p = kl_partition(g, loose(), 31, {8, 4, 50}, &diag);
        double prev = diag.initial_cut;
        for (double cut : diag.pass_cuts) {
            CHECK(cut <= prev);
            prev = cut;
        }
        CHECK(p.cut_weight <= diag.initial_cut);
    }

    SECTION("heuristic never beats the exhaustive oracle (<= 16 nodes)") {
        Rng rng(123);
        for (int rep = 0; rep < 40; ++rep) {
            const int n = 4 + static_cast<int>(rng.below(13));
            std::vector<GraphEdge> edges;
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v)
                    if (rng.uniform() < 0.45) edges.push_back({u, v, rng.uniform(0.5, 2.0)});
            const auto g = make_graph(ids_n(n), edges);
            const BalanceConstraints c{0.5, 0.9, 0.9};
            const auto oracle = brute_force_min_cut(g, c);
            const auto heur = kl_partition(g, c, 7000 + static_cast<std::uint64_t>(rep));
            CHECK(heur.cut_weight >= oracle.cut_weight);
        }
    }

    SECTION("beats random feasible splits on average over 100+ seeds") {
        const auto g = two_block_graph(10, 0.5, 2024);
        const BalanceConstraints c = loose();
        std::vector<double> kl_cuts, random_cuts;
        for (int s = 0; s < 100; ++s) {
            kl_cuts.push_back(kl_partition(g, c, static_cast<std::uint64_t>(s), {4, 1, 50}).cut_weight);
            const auto init = cipsm::detail::feasible_init(g, c, 50000 + static_cast<std::uint64_t>(s), 50);
            REQUIRE(init.has_value());
            random_cuts.push_back(crossing_weight(g, *init));
        }
        CHECK(test_support::mean(kl_cuts) < test_support::mean(random_cuts));
    }
}

TEST_CASE("validate_mutual_exclusion") {
    const auto g = make_graph(ids_n(4), {{0, 1, 49.0}, {2, 3, 49.0}, {0, 2, 2.0}});
    Partition p;
    p.side_a = {"n00", "n01"};
    p.side_b = {"n02", "n03"};

    SECTION("zero-cut partition passes any epsilon") {
        const auto zero_g = make_graph(ids_n(4), {{0, 1, 5.0}, {2, 3, 5.0}});
        const auto report = validate_mutual_exclusion(zero_g, p, 1e-9);
        CHECK(report.pass);
        CHECK(report.capacity == 0.0);
        CHECK(report.heaviest_crossing.empty());
    }

    SECTION("capacity 0.02 fails epsilon 0.001 and lists the crossing edge") {
        const auto report = validate_mutual_exclusion(g, p, 0.001);
        CHECK_FALSE(report.pass);
        CHECK(report.capacity == Catch::Approx(0.02));
        REQUIRE(report.heaviest_crossing.size() == 1);
        CHECK(report.heaviest_crossing[0].u == "n00");
        CHECK(report.heaviest_crossing[0].v == "n02");
        CHECK(report.heaviest_crossing[0].weight == 2.0);
    }

    SECTION("clustered graph passes at epsilon 0.05 after KL") {
        const auto blocks = two_block_graph(10, 0.2, 31);
        const auto part = kl_partition(blocks, loose(), 8);
        const auto report = validate_mutual_exclusion(blocks, part, 0.05);
        CHECK(report.pass);
    }
}
