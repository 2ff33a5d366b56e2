#include <catch2/catch_amalgamated.hpp>

#include "cipsm/graph.hpp"
#include "cipsm/market.hpp"
#include "cipsm/rng.hpp"

using namespace cipsm;

namespace {

std::vector<ItemSpec> two_category_items() {
    std::vector<ItemSpec> items;
    auto add = [&](const std::string& id, const std::string& leaf, double q) {
        ItemSpec it;
        it.item_id = id;
        it.category_path = {"top", "mid", leaf};
        it.base_quality = q;
        it.price = 10.0;
        it.base_demand_weight = 1.0;
        items.push_back(it);
    };
    add("a1", "c0", 1.0);
    add("a2", "c0", 1.0);
    add("b1", "c1", 1.0);
    add("b2", "c1", 1.0);
    return items;
}

MarketConfig graph_config(std::vector<ItemSpec> items) {
    MarketConfig cfg;
    cfg.items = std::move(items);
    cfg.requests_per_day = 400;
    cfg.days_pre = 2;
    cfg.days_post = 1;
    cfg.visible_slots = 2;
    cfg.rng_seed = 17;
    return cfg;
}

// Hand-assembled graph used by cut-metric tests.
CompetitionGraph make_graph(const std::vector<std::string>& ids, const std::vector<GraphEdge>& edges) {
    std::vector<NodeMetrics> metrics(ids.size());
    for (auto& m : metrics) {
        m.pv = 100;
        m.orders = 10;
        m.gmv = 100.0;
        m.price = 10.0;
        m.category_path = {"t", "m", "l"};
    }
    return CompetitionGraph(ids, metrics, edges);
}

}  // namespace

TEST_CASE("build_graph: items never co-visible have no edge") {
    auto cfg = graph_config(two_category_items());
    SimulateOptions opts;
    opts.record_requests = true;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);
    const auto panel = to_request_level_panel(*sim.request_log, cfg, std::nullopt);
    const auto graph = build_graph(panel, {0, cfg.total_days()}, cfg.items);

    for (const auto& e : graph.edges()) {
        const auto& u = graph.id(e.u);
        const auto& v = graph.id(e.v);
        // Cross-category pairs never share a request.
        CHECK(u[0] == v[0]);
    }
}

TEST_CASE("build_graph: always co-visible pair has weight equal to the request count") {
    std::vector<ItemSpec> items;
    for (const auto& id : {"u", "v"}) {
        ItemSpec it;
        it.item_id = id;
        it.category_path = {"top", "mid", "c0"};
        it.base_quality = 1.0;
        it.price = 10.0;
        it.base_demand_weight = 1.0;
        items.push_back(it);
    }
    auto cfg = graph_config(std::move(items));
    cfg.visible_slots = 2;  // both items always visible
    SimulateOptions opts;
    opts.record_requests = true;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);
    const auto panel = to_request_level_panel(*sim.request_log, cfg, std::nullopt);
    const auto graph = build_graph(panel, {0, cfg.total_days()}, cfg.items);

    REQUIRE(graph.edges().size() == 1);
    const std::int64_t total_requests = cfg.requests_per_day * cfg.total_days();
    CHECK(graph.edges()[0].weight == static_cast<double>(total_requests));
}

TEST_CASE("build_graph: 3-item category with 2 slots severs weight equal to category requests") {
    std::vector<ItemSpec> items;
    for (const auto& id : {"u", "v", "w"}) {
        ItemSpec it;
        it.item_id = id;
        it.category_path = {"top", "mid", "c0"};
        it.base_quality = 1.0;
        it.price = 10.0;
        it.base_demand_weight = 1.0;
        items.push_back(it);
    }
    auto cfg = graph_config(std::move(items));
    cfg.visible_slots = 2;
    SimulateOptions opts;
    opts.record_requests = true;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);
    const auto panel = to_request_level_panel(*sim.request_log, cfg, std::nullopt);
    const auto graph = build_graph(panel, {0, cfg.total_days()}, cfg.items);

    // Each request exposes exactly one pair, so weights sum to the request count.
    double total = 0.0;
    for (const auto& e : graph.edges()) total += e.weight;
    CHECK(total == static_cast<double>(cfg.requests_per_day * cfg.total_days()));
}

TEST_CASE("build_graph: node metrics equal panel sums over the window") {
    auto cfg = graph_config(two_category_items());
    SimulateOptions opts;
    opts.record_requests = true;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);
    const auto panel = to_request_level_panel(*sim.request_log, cfg, std::nullopt);
    const DayRange window{0, cfg.days_pre};
    const auto graph = build_graph(panel, window, cfg.items);

    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const auto idx = static_cast<std::int32_t>(i);
        std::int64_t pv = 0, orders = 0;
        double gmv = 0.0;
        for (const auto& row : sim.panel.rows) {
            if (row.item_id != graph.id(idx) || !window.contains(row.day)) continue;
            pv += row.impressions;
            orders += row.transactions;
            gmv += row.gmv;
        }
        CHECK(graph.metrics(idx).pv == pv);
        CHECK(graph.metrics(idx).orders == orders);
        CHECK(graph.metrics(idx).gmv == gmv);
    }
}

TEST_CASE("build_graph: streaming co-exposure counter matches the request-level path") {
    auto cfg = graph_config(generate_catalog(30, 3, 2));
    const DayRange window{0, cfg.days_pre};
    CoExposureCounter counter(window);
    SimulateOptions opts;
    opts.record_requests = true;
    opts.co_exposure = &counter;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);

    const auto from_log = build_graph(to_request_level_panel(*sim.request_log, cfg, std::nullopt),
                                      window, cfg.items);
    const auto from_counter = build_graph(sim.panel, counter, window, cfg.items);

    REQUIRE(from_log.edges().size() == from_counter.edges().size());
    for (std::size_t i = 0; i < from_log.edges().size(); ++i) {
        CHECK(from_log.edges()[i].u == from_counter.edges()[i].u);
        CHECK(from_log.edges()[i].v == from_counter.edges()[i].v);
        CHECK(from_log.edges()[i].weight == from_counter.edges()[i].weight);
    }
}

TEST_CASE("build_graph rejects bad windows and aggregated panels") {
    auto cfg = graph_config(two_category_items());
    SimulateOptions opts;
    opts.record_requests = true;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);
    const auto panel = to_request_level_panel(*sim.request_log, cfg, std::nullopt);

    CHECK_THROWS_MATCHES(build_graph(panel, {2, 2}, cfg.items), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::invalid_window;
                         }));
    CHECK_THROWS_AS(build_graph(panel, {0, 99}, cfg.items), Error);
    CHECK_THROWS_MATCHES(build_graph(sim.panel, {0, 2}, cfg.items), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::invalid_input;
                         }));
}

TEST_CASE("normalized_cut_capacity") {
    SECTION("disconnected halves have capacity zero") {
        const auto g = make_graph({"a", "b", "c", "d"},
                                  {{0, 1, 5.0}, {2, 3, 5.0}});  // a-b and c-d
        Partition p;
        p.side_a = {"a", "b"};
        p.side_b = {"c", "d"};
        CHECK(normalized_cut_capacity(g, p) == 0.0);
    }

    SECTION("severed weight 2 of total 100 gives 0.02") {
        const auto g = make_graph({"a", "b", "c", "d"},
                                  {{0, 1, 49.0}, {2, 3, 49.0}, {0, 2, 2.0}});
        Partition p;
        p.side_a = {"a", "b"};
        p.side_b = {"c", "d"};
        CHECK(normalized_cut_capacity(g, p) == Catch::Approx(0.02));
    }

    SECTION("K4 with unit weights and a balanced split severs 4 of 6") {
        const auto g = make_graph({"a", "b", "c", "d"},
                                  {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0},
                                   {1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
        Partition p;
        p.side_a = {"a", "b"};
        p.side_b = {"c", "d"};
        CHECK(normalized_cut_capacity(g, p) == Catch::Approx(4.0 / 6.0));
    }

    SECTION("missing nodes are rejected") {
        const auto g = make_graph({"a", "b", "c", "d"}, {{0, 1, 1.0}});
        Partition p;
        p.side_a = {"a"};
        p.side_b = {"b", "c"};
        CHECK_THROWS_MATCHES(normalized_cut_capacity(g, p), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.code() == ErrorCode::invalid_partition;
                             }));
    }

    SECTION("capacity lies in [0, 1] for random partitions") {
        Rng rng(99);
        std::vector<std::string> ids;
        for (int i = 0; i < 12; ++i) ids.push_back("n" + std::to_string(i));
        std::vector<GraphEdge> edges;
        for (int u = 0; u < 12; ++u)
            for (int v = u + 1; v < 12; ++v)
                if (rng.uniform() < 0.4) edges.push_back({u, v, rng.uniform(0.1, 3.0)});
        const auto g = make_graph(ids, edges);
        for (int rep = 0; rep < 20; ++rep) {
            Partition p;
            for (const auto& id : ids) (rng.uniform() < 0.5 ? p.side_a : p.side_b).push_back(id);
            if (p.side_a.empty() || p.side_b.empty()) continue;
            const double c = normalized_cut_capacity(g, p);
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
    }
}

TEST_CASE("graph symmetry: adjacency mirrors every edge") {
    auto cfg = graph_config(generate_catalog(24, 4, 8));
    SimulateOptions opts;
    opts.record_requests = true;
    const auto sim = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, opts);
    const auto graph = build_graph(to_request_level_panel(*sim.request_log, cfg, std::nullopt),
                                   {0, cfg.total_days()}, cfg.items);
    for (const auto& e : graph.edges()) {
        bool forward = false, backward = false;
        for (const auto& [n, w] : graph.neighbors(e.u))
            if (n == e.v && w == e.weight) forward = true;
        for (const auto& [n, w] : graph.neighbors(e.v))
            if (n == e.u && w == e.weight) backward = true;
        CHECK(forward);
        CHECK(backward);
    }
}
