// Four-dimensional stratification and stratified CTCVR matching: per-target
// homogeneous item sets minimizing the pre-intervention gap, with the random
// and stratified-random ablation orderings behind the same machinery.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cipsm/errors.hpp"
#include "cipsm/graph.hpp"
#include "cipsm/market.hpp"
#include "cipsm/rng.hpp"

namespace cipsm {

struct StratificationConfig {
    std::vector<std::int64_t> pv_bucket_edges = {100, 1000};  // low <= e0 < medium < e1 <= high
    int transaction_bin_count = 10;
    int price_bin_count = 10;

    void validate() const {
        if (pv_bucket_edges.size() != 2 || pv_bucket_edges[0] >= pv_bucket_edges[1])
            throw Error(ErrorCode::invalid_config, "pv_bucket_edges must be two increasing thresholds");
        if (transaction_bin_count < 2 || price_bin_count < 2)
            throw Error(ErrorCode::invalid_config, "bin counts must be >= 2");
    }
};

enum class PvBucket : int { low = 0, medium = 1, high = 2 };

// Boundary membership follows the closed outer buckets: pv <= edge0 is low,
// pv >= edge1 is high, medium is the open interval between them.
inline PvBucket pv_bucket_of(std::int64_t pv, const StratificationConfig& cfg) {
    if (pv <= cfg.pv_bucket_edges[0]) return PvBucket::low;
    if (pv >= cfg.pv_bucket_edges[1]) return PvBucket::high;
    return PvBucket::medium;
}

struct StratumKey {
    std::string category_path;  // joined 3-level path
    int pv_bucket = 0;
    int transaction_bin = 0;
    int price_bin = 0;

    friend bool operator==(const StratumKey&, const StratumKey&) = default;
    friend auto operator<=>(const StratumKey&, const StratumKey&) = default;
};

// Equal-count quantile binning by min-rank: items sharing a value share a
// bin; n distinct values split evenly across k bins.
inline std::vector<int> quantile_bins(const std::vector<double>& values, int k) {
    const std::size_t n = values.size();
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> bins(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto rank = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin());
        bins[i] = static_cast<int>((rank * static_cast<std::size_t>(k)) / n);
    }
    return bins;
}

// Assigns every item to exactly one stratum. Transaction and price bins are
// quantile bins over the full input population.
inline std::map<StratumKey, std::vector<std::string>> stratify(
    const std::map<std::string, NodeMetrics>& items, const StratificationConfig& cfg) {
    cfg.validate();
    if (items.empty()) throw Error(ErrorCode::invalid_input, "stratify needs a nonempty item set");

    std::vector<const std::string*> ids;
    std::vector<double> orders, prices;
    ids.reserve(items.size());
    for (const auto& [id, m] : items) {
        ids.push_back(&id);
        orders.push_back(static_cast<double>(m.orders));
        prices.push_back(m.price);
    }
    const std::vector<int> tbins = quantile_bins(orders, cfg.transaction_bin_count);
    const std::vector<int> pbins = quantile_bins(prices, cfg.price_bin_count);

    std::map<StratumKey, std::vector<std::string>> strata;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const NodeMetrics& m = items.at(*ids[i]);
        StratumKey key{m.category_joined(), static_cast<int>(pv_bucket_of(m.pv, cfg)), tbins[i], pbins[i]};
        strata[key].push_back(*ids[i]);
    }
    for (auto& [key, members] : strata) std::sort(members.begin(), members.end());
    return strata;
}

// transactions / impressions; Laplace-smoothed variant (t+1)/(pv+2).
inline double ctcvr(std::int64_t pv, std::int64_t transactions, bool laplace_smoothing = false) {
    if (pv < 0 || transactions < 0) throw Error(ErrorCode::invalid_input, "counts must be >= 0");
    if (laplace_smoothing)
        return (static_cast<double>(transactions) + 1.0) / (static_cast<double>(pv) + 2.0);
    if (pv == 0) throw Error(ErrorCode::undefined_rate, "ctcvr undefined for pv = 0 without smoothing");
    return static_cast<double>(transactions) / static_cast<double>(pv);
}

struct MatchSet {
    std::string target;
    std::vector<std::string> members;  // in selection order (rank 1 first)
    int k = 0;
    double pre_gap = 0.0;
    double pre_gap_relative = 0.0;  // percent of the target's T0 sum; NaN when that sum is 0

    friend bool operator==(const MatchSet&, const MatchSet&) = default;
};

enum class CandidateOrdering {
    ctcvr_distance,  // ascending |CTCVR(target) - CTCVR(candidate)|
    random,          // seeded shuffle
};

struct MatchOptions {
    Metric metric = Metric::orders;       // y series used by gap(k)
    int k_max = 10;
    bool laplace_smoothing = false;
    CandidateOrdering ordering = CandidateOrdering::ctcvr_distance;
    bool use_strata = true;               // false = whole pool is one stratum
    std::uint64_t shuffle_seed = 0;       // for CandidateOrdering::random
    StratificationConfig stratification;
};

// Pre-aggregated matching inputs over the T0 window.
class MatchContext {
public:
    MatchContext(const DailyPanel& history, DayRange t0, const std::vector<ItemSpec>& catalog)
        : t0_(t0), metrics_(aggregate_node_metrics(history, t0, catalog)) {
        for (const auto& [id, m] : metrics_) {
            daily_orders_[id].assign(static_cast<std::size_t>(t0.length()), 0.0);
            daily_gmv_[id].assign(static_cast<std::size_t>(t0.length()), 0.0);
        }
        for (const auto& row : history.rows) {
            if (!t0.contains(row.day)) continue;
            const auto day = static_cast<std::size_t>(row.day - t0.begin);
            daily_orders_[row.item_id][day] += static_cast<double>(row.transactions);
            daily_gmv_[row.item_id][day] += row.gmv;
        }
    }

    const std::map<std::string, NodeMetrics>& metrics() const { return metrics_; }
    DayRange t0() const { return t0_; }

    double t0_sum(const std::string& id, Metric metric) const {
        const auto& series = metric == Metric::orders ? daily_orders_ : daily_gmv_;
        auto it = series.find(id);
        if (it == series.end()) throw Error(ErrorCode::unknown_item, "no history for item " + id);
        double s = 0.0;
        for (double v : it->second) s += v;
        return s;
    }

private:
    DayRange t0_;
    std::map<std::string, NodeMetrics> metrics_;
    std::map<std::string, std::vector<double>> daily_orders_;
    std::map<std::string, std::vector<double>> daily_gmv_;
};

// Stratified CTCVR matching for one target against a candidate pool (by the
// caller's contract, the opposite partition side). Candidates sharing the
// target's stratum are ordered, then the set size k <= k_max is chosen to
// minimize gap(k) = |sum_T0 y_target - (1/k) sum_members sum_T0 y_m| over
// prefixes, ties to the smaller k.
inline MatchSet match_item(const MatchContext& ctx, const std::string& target,
                           const std::vector<std::string>& candidate_pool, const MatchOptions& opts) {
    if (opts.k_max < 1) throw Error(ErrorCode::invalid_config, "k_max must be >= 1");
    const auto& all = ctx.metrics();
    if (all.find(target) == all.end())
        throw Error(ErrorCode::unknown_item, "target " + target + " not in history");

    // Stratify the candidate pool plus the target; bins are quantiles over
    // exactly that population.
    std::vector<std::string> in_stratum;
    if (opts.use_strata) {
        std::map<std::string, NodeMetrics> population;
        population.emplace(target, all.at(target));
        for (const auto& id : candidate_pool) {
            if (id == target) continue;
            auto it = all.find(id);
            if (it == all.end()) throw Error(ErrorCode::unknown_item, "candidate " + id + " not in history");
            population.emplace(id, it->second);
        }
        const auto strata = stratify(population, opts.stratification);
        for (const auto& [key, members] : strata) {
            if (std::binary_search(members.begin(), members.end(), target)) {
                for (const auto& id : members)
                    if (id != target) in_stratum.push_back(id);
                break;
            }
        }
    } else {
        in_stratum.assign(candidate_pool.begin(), candidate_pool.end());
        in_stratum.erase(std::remove(in_stratum.begin(), in_stratum.end(), target), in_stratum.end());
        std::sort(in_stratum.begin(), in_stratum.end());
    }
    if (in_stratum.empty())
        throw Error(ErrorCode::no_candidates, "no same-stratum candidates for target " + target);

    // Order candidates.
    std::vector<std::string> ordered;
    if (opts.ordering == CandidateOrdering::ctcvr_distance) {
        const NodeMetrics& tm = all.at(target);
        if (!opts.laplace_smoothing && tm.pv == 0)
            throw Error(ErrorCode::no_candidates, "target " + target + " has undefined CTCVR (pv = 0)");
        const double target_rate = ctcvr(tm.pv, tm.orders, opts.laplace_smoothing);
        std::vector<std::pair<double, std::string>> scored;
        for (const auto& id : in_stratum) {
            const NodeMetrics& cm = all.at(id);
            if (!opts.laplace_smoothing && cm.pv == 0) continue;  // unrankable
            scored.emplace_back(std::abs(target_rate - ctcvr(cm.pv, cm.orders, opts.laplace_smoothing)), id);
        }
        if (scored.empty())
            throw Error(ErrorCode::no_candidates,
                        "all candidates for target " + target + " have undefined CTCVR");
        std::sort(scored.begin(), scored.end());  // distance asc, then item_id asc
        for (auto& [d, id] : scored) ordered.push_back(std::move(id));
    } else {
        ordered = in_stratum;
        Rng rng(hash_mix(opts.shuffle_seed, 0x5e1ec7, std::hash<std::string>{}(target)));
        rng.shuffle(ordered);
    }

    // Adaptive set size over prefixes.
    const double target_sum = ctx.t0_sum(target, opts.metric);
    const int k_limit = static_cast<int>(std::min<std::size_t>(ordered.size(), static_cast<std::size_t>(opts.k_max)));
    double prefix_sum = 0.0;
    int best_k = 0;
    double best_gap = 0.0;
    for (int k = 1; k <= k_limit; ++k) {
        prefix_sum += ctx.t0_sum(ordered[static_cast<std::size_t>(k - 1)], opts.metric);
        const double gap = std::abs(target_sum - prefix_sum / static_cast<double>(k));
        if (best_k == 0 || gap < best_gap) {
            best_k = k;
            best_gap = gap;
        }
    }

    MatchSet out;
    out.target = target;
    out.members.assign(ordered.begin(), ordered.begin() + best_k);
    out.k = best_k;
    out.pre_gap = best_gap;
    out.pre_gap_relative = target_sum != 0.0 ? best_gap / std::abs(target_sum) * 100.0
                                             : std::numeric_limits<double>::quiet_NaN();
    return out;
}

struct MatchFailure {
    std::string target;
    ErrorCode code = ErrorCode::no_candidates;
    std::string message;
};

struct MatchReport {
    std::map<std::string, MatchSet> matched;
    std::vector<MatchFailure> unmatched;  // reported, never silently dropped

    // Mean pre_gap_relative over matched targets with a finite relative gap.
    double mean_pre_gap_relative() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [t, m] : matched) {
            if (std::isnan(m.pre_gap_relative)) continue;
            sum += m.pre_gap_relative;
            ++n;
        }
        return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
    }
};

// Matches every target from the partition side opposite to it.
inline MatchReport match_all(const MatchContext& ctx, const std::set<std::string>& targets,
                             const Partition& partition, const MatchOptions& opts) {
    MatchReport report;
    for (const auto& target : targets) {
        const bool target_in_a = partition.in_side_a(target);
        if (!target_in_a && !partition.in_side_b(target)) {
            report.unmatched.push_back({target, ErrorCode::unknown_item, "target not in partition"});
            continue;
        }
        const auto& pool = target_in_a ? partition.side_b : partition.side_a;
        try {
            MatchSet m = match_item(ctx, target, pool, opts);
            report.matched.emplace(target, std::move(m));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::no_candidates)
                report.unmatched.push_back({target, e.code(), e.what()});
            else
                throw;
        }
    }
    return report;
}

}  // namespace cipsm
