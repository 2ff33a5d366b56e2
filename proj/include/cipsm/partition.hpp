// Balanced min-cut bipartitioning: Kernighan-Lin pair-swap passes under hard
// node/order/GMV balance constraints, plus an exhaustive oracle for small
// graphs and the mutual-exclusion check.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cipsm/errors.hpp"
#include "cipsm/graph.hpp"
#include "cipsm/rng.hpp"

namespace cipsm {

struct BalanceConstraints {
    double delta_n = 0.05;  // max |nA - nB| / (nA + nB)
    double delta_p = 0.15;  // max relative order-volume imbalance
    double delta_g = 0.20;  // max relative GMV imbalance
};

inline void validate_constraints(const BalanceConstraints& c) {
    auto ok = [](double d) { return d > 0.0 && d <= 1.0; };
    if (!ok(c.delta_n) || !ok(c.delta_p) || !ok(c.delta_g))
        throw Error(ErrorCode::invalid_config, "balance constraints must be in (0, 1]");
}

struct KlOptions {
    int max_passes = 16;
    int restarts = 8;          // independent seeded starts, best cut kept
    int init_retries = 50;     // random balanced splits tried per restart
};

struct KlDiagnostics {
    std::vector<double> pass_cuts;  // cut after each pass of the winning restart
    double initial_cut = 0.0;       // initial cut of the winning restart
    int restarts_run = 0;
    int infeasible_inits = 0;
};

namespace detail {

inline double rel_imbalance(double a, double b) {
    const double total = a + b;
    if (total == 0.0) return 0.0;
    return std::abs(a - b) / total;
}

struct SideTotals {
    double nodes_a = 0, nodes_b = 0;
    double orders_a = 0, orders_b = 0;
    double gmv_a = 0, gmv_b = 0;

    bool feasible(const BalanceConstraints& c) const {
        return rel_imbalance(nodes_a, nodes_b) <= c.delta_n &&
               rel_imbalance(orders_a, orders_b) <= c.delta_p &&
               rel_imbalance(gmv_a, gmv_b) <= c.delta_g;
    }
};

inline SideTotals side_totals(const CompetitionGraph& graph, const std::vector<char>& in_a) {
    SideTotals t;
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const NodeMetrics& m = graph.metrics(static_cast<std::int32_t>(i));
        if (in_a[i]) {
            t.nodes_a += 1;
            t.orders_a += static_cast<double>(m.orders);
            t.gmv_a += m.gmv;
        } else {
            t.nodes_b += 1;
            t.orders_b += static_cast<double>(m.orders);
            t.gmv_b += m.gmv;
        }
    }
    return t;
}

// Totals after swapping a (in A) with b (in B) remain feasible?
inline bool swap_feasible(const SideTotals& t, const BalanceConstraints& c, const NodeMetrics& ma,
                          const NodeMetrics& mb) {
    const double da = static_cast<double>(mb.orders) - static_cast<double>(ma.orders);
    const double dg = mb.gmv - ma.gmv;
    return rel_imbalance(t.orders_a + da, t.orders_b - da) <= c.delta_p &&
           rel_imbalance(t.gmv_a + dg, t.gmv_b - dg) <= c.delta_g;
}

inline void apply_swap_totals(SideTotals& t, const NodeMetrics& ma, const NodeMetrics& mb) {
    const double da = static_cast<double>(mb.orders) - static_cast<double>(ma.orders);
    const double dg = mb.gmv - ma.gmv;
    t.orders_a += da;
    t.orders_b -= da;
    t.gmv_a += dg;
    t.gmv_b -= dg;
}

// Canonical partition output: side_a is the side holding the smallest item
// id; both sides sorted.
inline Partition make_partition(const CompetitionGraph& graph, std::vector<char> in_a) {
    if (!graph.node_count()) throw Error(ErrorCode::invalid_input, "empty graph");
    if (!in_a[0]) {
        for (auto& f : in_a) f = static_cast<char>(!f);
    }
    Partition p;
    for (std::size_t i = 0; i < graph.node_count(); ++i)
        (in_a[i] ? p.side_a : p.side_b).push_back(graph.id(static_cast<std::int32_t>(i)));
    p.cut_weight = crossing_weight(graph, in_a);
    const SideTotals t = side_totals(graph, in_a);
    p.balance.node = rel_imbalance(t.nodes_a, t.nodes_b);
    p.balance.order = rel_imbalance(t.orders_a, t.orders_b);
    p.balance.gmv = rel_imbalance(t.gmv_a, t.gmv_b);
    return p;
}

// One KL pass: a gain-ordered sequence of tentative feasible pair swaps with
// locking, committing the best positive prefix. Returns the cut improvement.
inline double kl_pass(const CompetitionGraph& graph, const BalanceConstraints& constraints,
                      std::vector<char>& in_a) {
    const std::size_t n = graph.node_count();

    // D[v] = external - internal weight.
    std::vector<double> gain_d(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (const auto& [w, wt] : graph.neighbors(static_cast<std::int32_t>(v)))
            gain_d[v] += in_a[v] != in_a[static_cast<std::size_t>(w)] ? wt : -wt;

    std::vector<char> locked(n, 0);
    std::vector<char> cur = in_a;  // tentative state
    SideTotals totals = side_totals(graph, cur);

    struct Step {
        std::int32_t a, b;
        double gain;
    };
    std::vector<Step> steps;
    double cum = 0.0, best_cum = 0.0;
    std::size_t best_prefix = 0;

    auto edge_weight = [&](std::int32_t a, std::int32_t b) {
        const auto& nb = graph.neighbors(a);
        for (const auto& [w, wt] : nb)
            if (w == b) return wt;
        return 0.0;
    };

    while (true) {
        // Unlocked nodes per side, ordered by D descending then id ascending
        // (deterministic tie-break: lowest item_id pair first).
        std::vector<std::int32_t> la, lb;
        for (std::size_t v = 0; v < n; ++v) {
            if (locked[v]) continue;
            (cur[v] ? la : lb).push_back(static_cast<std::int32_t>(v));
        }
        if (la.empty() || lb.empty()) break;
        auto by_gain = [&](std::int32_t x, std::int32_t y) {
            if (gain_d[static_cast<std::size_t>(x)] != gain_d[static_cast<std::size_t>(y)])
                return gain_d[static_cast<std::size_t>(x)] > gain_d[static_cast<std::size_t>(y)];
            return graph.id(x) < graph.id(y);
        };
        std::sort(la.begin(), la.end(), by_gain);
        std::sort(lb.begin(), lb.end(), by_gain);

        // Best feasible pair. gain(a,b) = D[a] + D[b] - 2 w(a,b) <= D[a] + D[b]
        // since weights are nonnegative, so the sorted scan can stop early.
        double best_gain = -std::numeric_limits<double>::infinity();
        std::int32_t best_a = -1, best_b = -1;
        for (std::int32_t a : la) {
            if (gain_d[static_cast<std::size_t>(a)] + gain_d[static_cast<std::size_t>(lb[0])] <= best_gain &&
                best_a >= 0)
                break;
            for (std::int32_t b : lb) {
                const double bound = gain_d[static_cast<std::size_t>(a)] + gain_d[static_cast<std::size_t>(b)];
                if (bound <= best_gain && best_a >= 0) break;
                if (!swap_feasible(totals, constraints, graph.metrics(a), graph.metrics(b))) continue;
                const double g = bound - 2.0 * edge_weight(a, b);
                const bool better =
                    g > best_gain ||
                    (g == best_gain && best_a >= 0 &&
                     std::make_pair(graph.id(a), graph.id(b)) < std::make_pair(graph.id(best_a), graph.id(best_b)));
                if (best_a < 0 || better) {
                    best_gain = g;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (best_a < 0) break;  // no feasible pair left

        // Tentatively swap, lock, and update D for unlocked neighbors.
        apply_swap_totals(totals, graph.metrics(best_a), graph.metrics(best_b));
        cur[static_cast<std::size_t>(best_a)] = 0;
        cur[static_cast<std::size_t>(best_b)] = 1;
        locked[static_cast<std::size_t>(best_a)] = 1;
        locked[static_cast<std::size_t>(best_b)] = 1;
        for (const auto& [x, wt] : graph.neighbors(best_a)) {
            if (locked[static_cast<std::size_t>(x)]) continue;
            gain_d[static_cast<std::size_t>(x)] += cur[static_cast<std::size_t>(x)] ? 2.0 * wt : -2.0 * wt;
        }
        for (const auto& [x, wt] : graph.neighbors(best_b)) {
            if (locked[static_cast<std::size_t>(x)]) continue;
            gain_d[static_cast<std::size_t>(x)] += cur[static_cast<std::size_t>(x)] ? -2.0 * wt : 2.0 * wt;
        }

        steps.push_back({best_a, best_b, best_gain});
        cum += best_gain;
        if (cum > best_cum) {
            best_cum = cum;
            best_prefix = steps.size();
        }
    }

    if (best_cum <= 0.0 || best_prefix == 0) return 0.0;
    for (std::size_t s = 0; s < best_prefix; ++s) {
        in_a[static_cast<std::size_t>(steps[s].a)] = 0;
        in_a[static_cast<std::size_t>(steps[s].b)] = 1;
    }
    return best_cum;
}

// Random balanced split satisfying the constraints, or nullopt.
inline std::optional<std::vector<char>> feasible_init(const CompetitionGraph& graph,
                                                      const BalanceConstraints& constraints,
                                                      std::uint64_t seed, int retries,
                                                      int* failures = nullptr) {
    const std::size_t n = graph.node_count();
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (int attempt = 0; attempt < retries; ++attempt) {
        rng.shuffle(order);
        std::vector<char> in_a(n, 0);
        for (std::size_t i = 0; i < n / 2; ++i) in_a[static_cast<std::size_t>(order[i])] = 1;
        if (side_totals(graph, in_a).feasible(constraints)) return in_a;
        if (failures) ++*failures;
    }
    return std::nullopt;
}

}  // namespace detail

// Seeded-restart Kernighan-Lin under balance constraints. Each restart draws
// a random feasible balanced split and runs improvement passes; any swap that
// would break a constraint is rejected outright. The best restart wins (cut,
// then lexicographic side_a).
inline Partition kl_partition(const CompetitionGraph& graph, const BalanceConstraints& constraints,
                              std::uint64_t seed, const KlOptions& options = {},
                              KlDiagnostics* diagnostics = nullptr) {
    validate_constraints(constraints);
    if (graph.node_count() == 0) throw Error(ErrorCode::invalid_input, "empty graph");
    if (graph.node_count() == 1)
        throw Error(ErrorCode::infeasible_constraints, "cannot balance a single node");

    std::optional<Partition> best;
    int infeasible = 0;
    int restarts_run = 0;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        auto init = detail::feasible_init(graph, constraints, hash_mix(seed, 0xA11CE, r),
                                          options.init_retries, &infeasible);
        if (!init) continue;
        ++restarts_run;
        std::vector<char> in_a = *init;

        std::vector<double> pass_cuts;
        const double initial_cut = crossing_weight(graph, in_a);
        double cut = initial_cut;
        for (int pass = 0; pass < options.max_passes; ++pass) {
            const double improvement = detail::kl_pass(graph, constraints, in_a);
            if (improvement <= 0.0) break;
            cut = crossing_weight(graph, in_a);
            pass_cuts.push_back(cut);
        }

        Partition candidate = detail::make_partition(graph, std::move(in_a));
        const bool wins = !best || candidate.cut_weight < best->cut_weight ||
                          (candidate.cut_weight == best->cut_weight && candidate.side_a < best->side_a);
        if (wins) {
            best = std::move(candidate);
            if (diagnostics) {
                diagnostics->pass_cuts = std::move(pass_cuts);
                diagnostics->initial_cut = initial_cut;
            }
        }
    }
    if (diagnostics) {
        diagnostics->restarts_run = restarts_run;
        diagnostics->infeasible_inits = infeasible;
    }
    if (!best)
        throw Error(ErrorCode::infeasible_constraints,
                    "no constraint-feasible initial split found after bounded retries");
    return *best;
}

// Exhaustive constraint-feasible minimum cut for graphs of at most 20 nodes.
// Ties resolve to the lexicographically smallest side_a membership.
inline Partition brute_force_min_cut(const CompetitionGraph& graph, const BalanceConstraints& constraints) {
    validate_constraints(constraints);
    const std::size_t n = graph.node_count();
    if (n == 0) throw Error(ErrorCode::invalid_input, "empty graph");
    if (n > 20) throw Error(ErrorCode::too_large, "brute force limited to 20 nodes");

    // Node 0 (smallest id) pinned to side A; sides are unordered so this
    // enumerates every bipartition once, and it matches the canonical output.
    std::optional<Partition> best;
    const std::uint64_t limit = n == 1 ? 1 : (1ULL << (n - 1));
    for (std::uint64_t mask = 0; mask < limit; ++mask) {
        std::vector<char> in_a(n, 0);
        in_a[0] = 1;
        for (std::size_t i = 1; i < n; ++i)
            if (mask & (1ULL << (i - 1))) in_a[i] = 1;
        if (!detail::side_totals(graph, in_a).feasible(constraints)) continue;
        Partition candidate = detail::make_partition(graph, std::move(in_a));
        if (!best || candidate.cut_weight < best->cut_weight ||
            (candidate.cut_weight == best->cut_weight && candidate.side_a < best->side_a))
            best = std::move(candidate);
    }
    if (!best) throw Error(ErrorCode::infeasible_constraints, "no feasible bipartition exists");
    return *best;
}

// ---------------------------------------------------------------------------
// Mutual-exclusion validation
// ---------------------------------------------------------------------------

struct CrossingEdge {
    std::string u;
    std::string v;
    double weight = 0.0;
};

struct MutualExclusionReport {
    bool pass = false;
    double capacity = 0.0;
    double epsilon = 0.0;
    std::vector<CrossingEdge> heaviest_crossing;  // descending weight, capped
};

inline MutualExclusionReport validate_mutual_exclusion(const CompetitionGraph& graph,
                                                       const Partition& partition, double epsilon_mutual,
                                                       std::size_t max_listed = 10) {
    MutualExclusionReport report;
    report.epsilon = epsilon_mutual;
    report.capacity = normalized_cut_capacity(graph, partition);
    report.pass = report.capacity <= epsilon_mutual;

    const std::vector<char> in_a = partition_assignment(graph, partition);
    std::vector<CrossingEdge> crossing;
    for (const auto& e : graph.edges())
        if (in_a[static_cast<std::size_t>(e.u)] != in_a[static_cast<std::size_t>(e.v)])
            crossing.push_back({graph.id(e.u), graph.id(e.v), e.weight});
    std::sort(crossing.begin(), crossing.end(), [](const CrossingEdge& a, const CrossingEdge& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return std::tie(a.u, a.v) < std::tie(b.u, b.v);
    });
    if (crossing.size() > max_listed) crossing.resize(max_listed);
    report.heaviest_crossing = std::move(crossing);
    return report;
}

}  // namespace cipsm
