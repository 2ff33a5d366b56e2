// Weighted item competition graph built from request-level co-exposure, plus
// partition-quality metrics.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <tuple>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cipsm/errors.hpp"
#include "cipsm/market.hpp"

namespace cipsm {

struct NodeMetrics {
    std::int64_t pv = 0;
    std::int64_t orders = 0;
    double gmv = 0.0;
    double price = 1.0;
    std::array<std::string, 3> category_path;

    std::string category_joined() const {
        return category_path[0] + "/" + category_path[1] + "/" + category_path[2];
    }
};

struct GraphEdge {
    std::int32_t u = 0;  // node indices, u < v
    std::int32_t v = 0;
    double weight = 0.0;
};

// Undirected, no self-loops, weights > 0 (zero-weight pairs are not stored).
// Nodes are item ids sorted ascending; edges sorted by (u, v).
class CompetitionGraph {
public:
    CompetitionGraph() = default;

    CompetitionGraph(std::vector<std::string> ids, std::vector<NodeMetrics> metrics,
                     std::vector<GraphEdge> edges)
        : ids_(std::move(ids)), metrics_(std::move(metrics)), edges_(std::move(edges)) {
        for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], static_cast<std::int32_t>(i));
        adjacency_.resize(ids_.size());
        for (const auto& e : edges_) {
            if (e.u == e.v) throw Error(ErrorCode::invalid_input, "self-loop on node " + ids_[e.u]);
            if (e.weight < 0.0) throw Error(ErrorCode::invalid_input, "negative edge weight");
            adjacency_[e.u].emplace_back(e.v, e.weight);
            adjacency_[e.v].emplace_back(e.u, e.weight);
            total_weight_ += e.weight;
        }
    }

    std::size_t node_count() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::string& id(std::int32_t i) const { return ids_[static_cast<std::size_t>(i)]; }
    const NodeMetrics& metrics(std::int32_t i) const { return metrics_[static_cast<std::size_t>(i)]; }
    const std::vector<NodeMetrics>& all_metrics() const { return metrics_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    double total_weight() const { return total_weight_; }

    const std::vector<std::pair<std::int32_t, double>>& neighbors(std::int32_t i) const {
        return adjacency_[static_cast<std::size_t>(i)];
    }

    std::int32_t index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw Error(ErrorCode::unknown_item, "node " + id + " not in graph");
        return it->second;
    }

    bool contains(const std::string& id) const { return index_.count(id) > 0; }

private:
    std::vector<std::string> ids_;
    std::vector<NodeMetrics> metrics_;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<std::pair<std::int32_t, double>>> adjacency_;
    std::unordered_map<std::string, std::int32_t> index_;
    double total_weight_ = 0.0;
};

// Sums pv/orders/gmv per item over the window; price and category come from
// the catalog (panels do not carry them).
inline std::map<std::string, NodeMetrics> aggregate_node_metrics(const DailyPanel& panel,
                                                                 const DayRange& window,
                                                                 const std::vector<ItemSpec>& catalog) {
    std::map<std::string, NodeMetrics> out;
    for (const auto& item : catalog) {
        NodeMetrics m;
        m.price = item.price;
        m.category_path = item.category_path;
        out.emplace(item.item_id, std::move(m));
    }
    for (const auto& row : panel.rows) {
        if (!window.contains(row.day)) continue;
        auto it = out.find(row.item_id);
        if (it == out.end())
            throw Error(ErrorCode::unknown_item, "panel row references item " + row.item_id +
                                                     " missing from catalog");
        it->second.pv += row.impressions;
        it->second.orders += row.transactions;
        it->second.gmv += row.gmv;
    }
    return out;
}

// Accumulates co-exposure pair counts while the simulator runs, so graphs can
// be built at scales where request logs would not fit in memory.
class CoExposureCounter : public CoExposureSink {
public:
    explicit CoExposureCounter(DayRange window) : window_(window) {}

    void on_request(int day, int /*bucket*/, const std::vector<std::int32_t>& visible) override {
        if (!window_.contains(day)) return;
        for (std::size_t a = 0; a + 1 < visible.size(); ++a)
            for (std::size_t b = a + 1; b < visible.size(); ++b) {
                const std::uint64_t key =
                    (static_cast<std::uint64_t>(static_cast<std::uint32_t>(visible[a])) << 32) |
                    static_cast<std::uint32_t>(visible[b]);
                counts_[key] += 1;
            }
    }

    const std::unordered_map<std::uint64_t, std::int64_t>& counts() const { return counts_; }

private:
    DayRange window_;
    std::unordered_map<std::uint64_t, std::int64_t> counts_;
};

namespace detail {

inline CompetitionGraph assemble_graph(const std::map<std::string, NodeMetrics>& metrics,
                                       std::map<std::pair<std::string, std::string>, double>&& weights) {
    std::vector<std::string> ids;
    ids.reserve(metrics.size());
    std::vector<NodeMetrics> node_metrics;
    node_metrics.reserve(metrics.size());
    for (const auto& [id, m] : metrics) {
        ids.push_back(id);
        node_metrics.push_back(m);
    }
    std::unordered_map<std::string, std::int32_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<std::int32_t>(i));

    std::vector<GraphEdge> edges;
    edges.reserve(weights.size());
    for (const auto& [key, w] : weights) {
        if (w <= 0.0) continue;  // zero-weight pairs dropped
        std::int32_t u = index.at(key.first);
        std::int32_t v = index.at(key.second);
        if (u > v) std::swap(u, v);
        edges.push_back({u, v, w});
    }
    std::sort(edges.begin(), edges.end(),
              [](const GraphEdge& a, const GraphEdge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    return CompetitionGraph(std::move(ids), std::move(node_metrics), std::move(edges));
}

}  // namespace detail

// Builds the graph from a request-level panel: edge weight w_uv = number of
// requests in the window exposing both u and v. Requires request_id rows.
inline CompetitionGraph build_graph(const DailyPanel& panel, const DayRange& window,
                                    const std::vector<ItemSpec>& catalog) {
    if (window.empty()) throw Error(ErrorCode::invalid_window, "empty window");
    const DayRange range = panel_day_range(panel);
    if (!panel.rows.empty() && (window.begin < range.begin || window.end > range.end))
        throw Error(ErrorCode::invalid_window, "window extends outside panel day range");
    if (!panel.request_level)
        throw Error(ErrorCode::invalid_input,
                    "graph construction needs a request-level panel (request_id column)");

    auto metrics = aggregate_node_metrics(panel, window, catalog);

    // Group visible items by request id.
    std::unordered_map<std::int64_t, std::vector<std::string>> by_request;
    for (const auto& row : panel.rows) {
        if (!window.contains(row.day)) continue;
        if (row.request_id < 0)
            throw Error(ErrorCode::invalid_input, "request-level panel row without request_id");
        by_request[row.request_id].push_back(row.item_id);
    }

    std::map<std::pair<std::string, std::string>, double> weights;
    for (auto& [req, seen] : by_request) {
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (std::size_t a = 0; a + 1 < seen.size(); ++a)
            for (std::size_t b = a + 1; b < seen.size(); ++b)
                weights[{seen[a], seen[b]}] += 1.0;
    }
    return detail::assemble_graph(metrics, std::move(weights));
}

// Fast path: same graph from a simulation's aggregated panel plus a
// CoExposureCounter fed during the run.
inline CompetitionGraph build_graph(const DailyPanel& aggregated_panel, const CoExposureCounter& counter,
                                    const DayRange& window, const std::vector<ItemSpec>& catalog) {
    if (window.empty()) throw Error(ErrorCode::invalid_window, "empty window");
    auto metrics = aggregate_node_metrics(aggregated_panel, window, catalog);
    std::map<std::pair<std::string, std::string>, double> weights;
    for (const auto& [key, count] : counter.counts()) {
        const auto ia = static_cast<std::int32_t>(key >> 32);
        const auto ib = static_cast<std::int32_t>(key & 0xffffffffULL);
        std::string a = catalog[static_cast<std::size_t>(ia)].item_id;
        std::string b = catalog[static_cast<std::size_t>(ib)].item_id;
        if (b < a) std::swap(a, b);
        weights[{a, b}] += static_cast<double>(count);
    }
    return detail::assemble_graph(metrics, std::move(weights));
}

// ---------------------------------------------------------------------------
// Partition-quality metric
// ---------------------------------------------------------------------------

struct BalanceReport {
    double node = 0.0;  // |a - b| / (a + b) per dimension
    double order = 0.0;
    double gmv = 0.0;
};

struct Partition {
    std::vector<std::string> side_a;  // sorted ascending
    std::vector<std::string> side_b;  // sorted ascending
    double cut_weight = 0.0;
    BalanceReport balance;

    bool in_side_a(const std::string& id) const {
        return std::binary_search(side_a.begin(), side_a.end(), id);
    }
    bool in_side_b(const std::string& id) const {
        return std::binary_search(side_b.begin(), side_b.end(), id);
    }
};

// Assignment vector (1 = side A) for graph node indices; validates coverage.
inline std::vector<char> partition_assignment(const CompetitionGraph& graph, const Partition& partition) {
    if (partition.side_a.size() + partition.side_b.size() != graph.node_count())
        throw Error(ErrorCode::invalid_partition, "partition does not cover all graph nodes");
    std::vector<char> in_a(graph.node_count(), 0);
    std::vector<char> seen(graph.node_count(), 0);
    for (const auto& id : partition.side_a) {
        const std::int32_t i = graph.index_of(id);
        if (seen[static_cast<std::size_t>(i)])
            throw Error(ErrorCode::invalid_partition, "node " + id + " assigned twice");
        seen[static_cast<std::size_t>(i)] = 1;
        in_a[static_cast<std::size_t>(i)] = 1;
    }
    for (const auto& id : partition.side_b) {
        const std::int32_t i = graph.index_of(id);
        if (seen[static_cast<std::size_t>(i)])
            throw Error(ErrorCode::invalid_partition, "node " + id + " assigned twice");
        seen[static_cast<std::size_t>(i)] = 1;
    }
    return in_a;
}

inline double crossing_weight(const CompetitionGraph& graph, const std::vector<char>& in_a) {
    double cut = 0.0;
    for (const auto& e : graph.edges())
        if (in_a[static_cast<std::size_t>(e.u)] != in_a[static_cast<std::size_t>(e.v)]) cut += e.weight;
    return cut;
}

// Severed cross-partition weight over total edge weight; 0 when the graph has
// no edges.
inline double normalized_cut_capacity(const CompetitionGraph& graph, const Partition& partition) {
    const std::vector<char> in_a = partition_assignment(graph, partition);
    if (graph.total_weight() == 0.0) return 0.0;
    return crossing_weight(graph, in_a) / graph.total_weight();
}

}  // namespace cipsm
