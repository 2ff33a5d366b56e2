// Synthetic two-sided marketplace: catalog synthesis, request-level demand
// simulation with cross-item interference, bucketed sinking, price treatment,
// and the twin-run perfect-A/B oracle.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cipsm/errors.hpp"
#include "cipsm/rng.hpp"

namespace cipsm {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct ItemSpec {
    std::string item_id;
    std::array<std::string, 3> category_path;  // exactly three taxonomy levels
    double base_quality = 0.0;
    double price = 1.0;
    double base_demand_weight = 1.0;

    std::string category_joined() const {
        return category_path[0] + "/" + category_path[1] + "/" + category_path[2];
    }
};

inline void validate_item(const ItemSpec& it) {
    if (it.item_id.empty()) throw Error(ErrorCode::invalid_config, "item_id must be nonempty");
    if (!(it.price > 0.0)) throw Error(ErrorCode::invalid_config, "price must be > 0 for item " + it.item_id);
    if (!(it.base_demand_weight > 0.0))
        throw Error(ErrorCode::invalid_config, "base_demand_weight must be > 0 for item " + it.item_id);
    for (const auto& level : it.category_path)
        if (level.empty())
            throw Error(ErrorCode::invalid_config, "category_path must have 3 nonempty levels for item " + it.item_id);
}

struct MarketConfig {
    std::vector<ItemSpec> items;
    std::int64_t requests_per_day = 1000;
    int days_pre = 7;   // T0 window: days [0, days_pre)
    int days_post = 7;  // T1 window: days [days_pre, days_pre + days_post)
    double price_sensitivity_beta = 0.1;
    double outside_option_utility = 0.0;
    int visible_slots = 4;
    std::uint64_t rng_seed = 1;
    // Scale of the per-request Gumbel ranking noise deciding visibility.
    // 0 makes exposure degenerate (a fixed top-k per category); larger values
    // spread exposure further down the utility order and widen co-exposure.
    double ranking_noise_scale = 1.0;
    // Std-dev of a per-category daily log-drift of demand weight. Nonzero
    // drift makes group composition matter for parallel trends.
    double category_demand_drift = 0.0;

    int total_days() const { return days_pre + days_post; }
};

inline void validate_config(const MarketConfig& cfg) {
    if (cfg.items.empty()) throw Error(ErrorCode::invalid_config, "items must be nonempty");
    if (cfg.requests_per_day <= 0) throw Error(ErrorCode::invalid_config, "requests_per_day must be >= 1");
    if (cfg.days_pre < 1) throw Error(ErrorCode::invalid_config, "days_pre must be >= 1");
    if (cfg.days_post < 1) throw Error(ErrorCode::invalid_config, "days_post must be >= 1");
    if (cfg.visible_slots < 1) throw Error(ErrorCode::invalid_config, "visible_slots must be >= 1");
    if (cfg.price_sensitivity_beta < 0.0)
        throw Error(ErrorCode::invalid_config, "price_sensitivity_beta must be >= 0");
    if (cfg.ranking_noise_scale < 0.0)
        throw Error(ErrorCode::invalid_config, "ranking_noise_scale must be >= 0");
    if (cfg.category_demand_drift < 0.0)
        throw Error(ErrorCode::invalid_config, "category_demand_drift must be >= 0");
    std::unordered_set<std::string> seen;
    for (const auto& it : cfg.items) {
        validate_item(it);
        if (!seen.insert(it.item_id).second)
            throw Error(ErrorCode::invalid_config, "duplicate item_id " + it.item_id);
    }
}

struct TreatmentPlan {
    std::set<std::string> target_items;
    double price_multiplier = 1.0;  // in (0, 1]; applied from day days_pre onward
};

inline void validate_treatment(const TreatmentPlan& t) {
    if (!(t.price_multiplier > 0.0) || t.price_multiplier > 1.0)
        throw Error(ErrorCode::invalid_config, "price_multiplier must be in (0, 1]");
}

struct SinkingBucket {
    std::string label;
    double share = 1.0;                // fraction of the request stream
    std::set<std::string> sunk_items;  // excluded from visibility in this bucket
};

struct SinkingPlan {
    std::vector<SinkingBucket> buckets;

    static SinkingPlan single_bucket(std::string label = "all") {
        SinkingPlan p;
        p.buckets.push_back({std::move(label), 1.0, {}});
        return p;
    }

    const SinkingBucket* find(const std::string& label) const {
        for (const auto& b : buckets)
            if (b.label == label) return &b;
        return nullptr;
    }
};

inline void validate_sinking(const SinkingPlan& plan) {
    if (plan.buckets.empty()) throw Error(ErrorCode::invalid_config, "sinking plan needs at least one bucket");
    double total = 0.0;
    std::unordered_set<std::string> labels;
    for (const auto& b : plan.buckets) {
        if (b.label.empty()) throw Error(ErrorCode::invalid_config, "bucket label must be nonempty");
        if (!(b.share > 0.0)) throw Error(ErrorCode::invalid_config, "bucket share must be > 0");
        if (!labels.insert(b.label).second)
            throw Error(ErrorCode::invalid_config, "duplicate bucket label " + b.label);
        total += b.share;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw Error(ErrorCode::invalid_config, "bucket shares must sum to 1");
}

struct PanelRow {
    int day = 0;
    std::string bucket;
    std::string item_id;
    std::int64_t impressions = 0;
    std::int64_t transactions = 0;
    double gmv = 0.0;
    std::int64_t request_id = -1;  // >= 0 only in request-level panels

    friend bool operator==(const PanelRow&, const PanelRow&) = default;
};

// Aggregated by (day, bucket, item) unless request_level, in which case one
// row per (request, visible item).
struct DailyPanel {
    std::vector<PanelRow> rows;
    bool request_level = false;

    friend bool operator==(const DailyPanel&, const DailyPanel&) = default;
};

struct DayRange {
    int begin = 0;
    int end = 0;  // exclusive

    int length() const { return end - begin; }
    bool contains(int day) const { return day >= begin && day < end; }
    bool empty() const { return end <= begin; }
};

// One simulated request and what it saw. Kept compact; only materialized on
// request (request logs grow with traffic).
struct RequestRecord {
    std::int64_t request_id = 0;
    std::int32_t day = 0;
    std::int32_t bucket_index = 0;
    std::int32_t purchased_item = -1;        // catalog index, -1 = outside option
    std::vector<std::int32_t> visible_items; // catalog indices, ascending
};

struct RequestLog {
    std::vector<std::string> bucket_labels;
    std::vector<RequestRecord> requests;
};

// Receives each request's visible set; used to accumulate co-exposure counts
// without materializing a request log.
class CoExposureSink {
public:
    virtual ~CoExposureSink() = default;
    virtual void on_request(int day, int bucket_index, const std::vector<std::int32_t>& visible) = 0;
};

struct SimulateOptions {
    bool record_requests = false;        // materialize a RequestLog
    CoExposureSink* co_exposure = nullptr;
};

struct SimResult {
    DailyPanel panel;  // aggregated rows, ordered (day, bucket, item index)
    // requests landing in each (day, bucket); indexed [day][bucket]
    std::vector<std::vector<std::int64_t>> requests_per_bucket;
    std::optional<RequestLog> request_log;
};

enum class Metric { orders, gmv };

inline const char* metric_name(Metric m) { return m == Metric::orders ? "orders" : "gmv"; }

inline Metric metric_from_name(const std::string& s) {
    if (s == "orders") return Metric::orders;
    if (s == "gmv") return Metric::gmv;
    throw Error(ErrorCode::invalid_config, "metric must be 'orders' or 'gmv', got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Catalog synthesis
// ---------------------------------------------------------------------------

// Round-robin assignment of items to n_categories leaf categories arranged in
// a 3-level taxonomy (4 leaves per mid node, 4 mid nodes per top node).
// Prices are log-normal, qualities normal, demand weights log-normal.
inline std::vector<ItemSpec> generate_catalog(std::int64_t n_items, std::int64_t n_categories,
                                              std::uint64_t seed) {
    if (n_items <= 0) throw Error(ErrorCode::invalid_config, "n_items must be >= 1");
    if (n_categories <= 0) throw Error(ErrorCode::invalid_config, "n_categories must be >= 1");
    if (n_items < n_categories)
        throw Error(ErrorCode::invalid_config, "n_items must be >= n_categories");

    auto leaf_path = [](std::int64_t leaf) {
        std::int64_t mid = leaf / 4;
        std::int64_t top = mid / 4;
        auto tag = [](const char* prefix, std::int64_t i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%s%03lld", prefix, static_cast<long long>(i));
            return std::string(buf);
        };
        return std::array<std::string, 3>{tag("d", top), tag("g", mid), tag("c", leaf)};
    };

    Rng rng(seed);
    std::vector<ItemSpec> items;
    items.reserve(static_cast<std::size_t>(n_items));
    for (std::int64_t i = 0; i < n_items; ++i) {
        ItemSpec it;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "item_%06lld", static_cast<long long>(i));
        it.item_id = buf;
        it.category_path = leaf_path(i % n_categories);
        it.base_quality = rng.normal(1.0, 0.6);
        it.price = rng.lognormal(std::log(20.0), 0.4);
        it.base_demand_weight = rng.lognormal(0.0, 0.25);
        items.push_back(std::move(it));
    }
    return items;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

// Stream tags keeping the counter-based draws of distinct quantities apart.
enum : std::uint64_t {
    stream_bucket = 0x11,
    stream_category = 0x22,
    stream_purchase = 0x33,
    stream_rank_noise = 0x44,
    stream_category_drift = 0x55,
};

struct CategoryLayout {
    std::vector<std::string> names;                  // leaf name order of first appearance
    std::vector<std::vector<std::int32_t>> items;    // item indices per category
    std::vector<double> base_weight;                 // sum of base_demand_weight
    std::vector<std::int32_t> category_of_item;      // item index -> category index
};

inline CategoryLayout build_category_layout(const std::vector<ItemSpec>& items) {
    CategoryLayout lay;
    std::unordered_map<std::string, std::int32_t> index;
    lay.category_of_item.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string key = items[i].category_joined();
        auto [it, inserted] = index.emplace(key, static_cast<std::int32_t>(lay.names.size()));
        if (inserted) {
            lay.names.push_back(key);
            lay.items.emplace_back();
            lay.base_weight.push_back(0.0);
        }
        lay.items[it->second].push_back(static_cast<std::int32_t>(i));
        lay.base_weight[it->second] += items[i].base_demand_weight;
        lay.category_of_item[i] = it->second;
    }
    return lay;
}

// Index of the first CDF entry with cdf[i] > u (u in [0,1), cdf normalized).
inline std::size_t pick_from_cdf(const std::vector<double>& cdf, double u) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return cdf.size() - 1;
    return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace detail

// Runs the demand simulation. Per request: bucket draw, leaf category draw
// (proportional to summed base_demand_weight, with optional per-category
// drift), visibility = top visible_slots non-sunk category items by
// base_quality - beta * price + ranking noise, one impression per visible
// item, and at most one purchase by multinomial logit on the noise-free
// utility against outside_option_utility.
//
// Every draw is a pure function of (rng_seed, stream, request index, item
// index); sinking and treatment change which draws matter but never which
// values they take, so runs differing only in plans share demand shocks.
inline SimResult simulate(const MarketConfig& cfg, const SinkingPlan& sinking,
                          const std::optional<TreatmentPlan>& treatment,
                          const SimulateOptions& opts = {}) {
    validate_config(cfg);
    validate_sinking(sinking);

    const auto& items = cfg.items;
    const std::size_t n_items = items.size();
    std::unordered_map<std::string, std::int32_t> id_index;
    id_index.reserve(n_items);
    for (std::size_t i = 0; i < n_items; ++i) id_index.emplace(items[i].item_id, static_cast<std::int32_t>(i));

    auto resolve = [&](const std::set<std::string>& ids, const char* what) {
        std::vector<std::int32_t> out;
        out.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = id_index.find(id);
            if (it == id_index.end())
                throw Error(ErrorCode::unknown_item, std::string(what) + " references unknown item " + id);
            out.push_back(it->second);
        }
        return out;
    };

    std::vector<char> treated(n_items, 0);
    double multiplier = 1.0;
    if (treatment) {
        validate_treatment(*treatment);
        for (std::int32_t idx : resolve(treatment->target_items, "treatment")) treated[idx] = 1;
        multiplier = treatment->price_multiplier;
    }

    const std::size_t n_buckets = sinking.buckets.size();
    std::vector<std::vector<char>> sunk(n_buckets, std::vector<char>(n_items, 0));
    std::vector<double> bucket_cdf(n_buckets, 0.0);
    {
        double acc = 0.0;
        for (std::size_t b = 0; b < n_buckets; ++b) {
            for (std::int32_t idx : resolve(sinking.buckets[b].sunk_items, "sinking plan")) sunk[b][idx] = 1;
            acc += sinking.buckets[b].share;
            bucket_cdf[b] = acc;
        }
        bucket_cdf.back() = 1.0;
    }

    const detail::CategoryLayout lay = detail::build_category_layout(items);
    const std::size_t n_cats = lay.names.size();

    // Per-category daily drift rates, a function of the config seed only.
    std::vector<double> drift_rate(n_cats, 0.0);
    if (cfg.category_demand_drift > 0.0) {
        for (std::size_t c = 0; c < n_cats; ++c) {
            const double u1 = u01(hash_mix(cfg.rng_seed, detail::stream_category_drift, c, 0));
            const double u2 = u01(hash_mix(cfg.rng_seed, detail::stream_category_drift, c, 1));
            const double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
            drift_rate[c] = cfg.category_demand_drift * r *
                            std::cos(6.283185307179586476925286766559 * u2);
        }
    }

    // Effective price and noise-free utility per item for the pre and post
    // phases (treatment multiplies prices from day days_pre onward).
    std::vector<std::array<double, 2>> price_phase(n_items);
    std::vector<std::array<double, 2>> util_phase(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        const double p0 = items[i].price;
        const double p1 = treated[i] ? items[i].price * multiplier : items[i].price;
        price_phase[i] = {p0, p1};
        util_phase[i] = {items[i].base_quality - cfg.price_sensitivity_beta * p0,
                         items[i].base_quality - cfg.price_sensitivity_beta * p1};
    }

    const int n_days = cfg.total_days();
    struct Cell {
        std::int64_t impressions = 0;
        std::int64_t transactions = 0;
    };
    // Dense accumulation: (day * n_buckets + bucket) * n_items + item.
    std::vector<Cell> cells(static_cast<std::size_t>(n_days) * n_buckets * n_items);

    SimResult result;
    result.requests_per_bucket.assign(n_days, std::vector<std::int64_t>(n_buckets, 0));
    if (opts.record_requests) {
        result.request_log.emplace();
        for (const auto& b : sinking.buckets) result.request_log->bucket_labels.push_back(b.label);
        result.request_log->requests.reserve(
            static_cast<std::size_t>(cfg.requests_per_day) * static_cast<std::size_t>(n_days));
    }

    std::vector<double> cat_cdf(n_cats);
    std::vector<std::pair<double, std::int32_t>> scored;  // (-noisy utility, item index)
    std::vector<std::int32_t> visible;
    std::vector<double> purchase_w;
    scored.reserve(64);
    visible.reserve(static_cast<std::size_t>(cfg.visible_slots));
    purchase_w.reserve(static_cast<std::size_t>(cfg.visible_slots) + 1);

    std::int64_t request_counter = 0;
    for (int day = 0; day < n_days; ++day) {
        const int phase = day >= cfg.days_pre ? 1 : 0;

        // Category CDF for this day.
        double total_w = 0.0;
        for (std::size_t c = 0; c < n_cats; ++c) {
            const double w = lay.base_weight[c] * std::exp(drift_rate[c] * day);
            total_w += w;
            cat_cdf[c] = total_w;
        }
        for (std::size_t c = 0; c < n_cats; ++c) cat_cdf[c] /= total_w;

        for (std::int64_t r = 0; r < cfg.requests_per_day; ++r, ++request_counter) {
            const std::uint64_t req = static_cast<std::uint64_t>(request_counter);

            const double u_bucket = u01(hash_mix(cfg.rng_seed, detail::stream_bucket, req));
            const std::size_t bucket = detail::pick_from_cdf(bucket_cdf, u_bucket);
            result.requests_per_bucket[day][bucket] += 1;

            const double u_cat = u01(hash_mix(cfg.rng_seed, detail::stream_category, req));
            const std::size_t cat = detail::pick_from_cdf(cat_cdf, u_cat);

            // Rank non-sunk category items by noisy utility.
            scored.clear();
            for (std::int32_t idx : lay.items[cat]) {
                if (sunk[bucket][idx]) continue;
                const double noise =
                    cfg.ranking_noise_scale == 0.0
                        ? 0.0
                        : cfg.ranking_noise_scale *
                              gumbel_from_u01(u01(hash_mix(cfg.rng_seed, detail::stream_rank_noise,
                                                           req, static_cast<std::uint64_t>(idx))));
                scored.emplace_back(-(util_phase[idx][phase] + noise), idx);
            }
            if (scored.empty()) {
                if (result.request_log)
                    result.request_log->requests.push_back(
                        {request_counter, day, static_cast<std::int32_t>(bucket), -1, {}});
                continue;
            }
            const std::size_t k = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(cfg.visible_slots));
            std::partial_sort(scored.begin(), scored.begin() + k, scored.end());

            visible.clear();
            for (std::size_t s = 0; s < k; ++s) visible.push_back(scored[s].second);
            std::sort(visible.begin(), visible.end());

            const std::size_t cell_base = (static_cast<std::size_t>(day) * n_buckets + bucket) * n_items;
            for (std::int32_t idx : visible) cells[cell_base + idx].impressions += 1;

            // Multinomial logit over visible items plus the outside option,
            // resolved by a single uniform against the weight CDF. Order:
            // visible items ascending by index, then the outside option.
            double max_u = cfg.outside_option_utility;
            for (std::int32_t idx : visible) max_u = std::max(max_u, util_phase[idx][phase]);
            purchase_w.clear();
            double wsum = 0.0;
            for (std::int32_t idx : visible) {
                wsum += std::exp(util_phase[idx][phase] - max_u);
                purchase_w.push_back(wsum);
            }
            wsum += std::exp(cfg.outside_option_utility - max_u);

            const double u_buy = u01(hash_mix(cfg.rng_seed, detail::stream_purchase, req)) * wsum;
            std::int32_t purchased = -1;
            for (std::size_t s = 0; s < purchase_w.size(); ++s) {
                if (u_buy < purchase_w[s]) {
                    purchased = visible[s];
                    break;
                }
            }
            if (purchased >= 0) cells[cell_base + purchased].transactions += 1;

            if (opts.co_exposure) opts.co_exposure->on_request(day, static_cast<int>(bucket), visible);
            if (result.request_log) {
                RequestRecord rec;
                rec.request_id = request_counter;
                rec.day = day;
                rec.bucket_index = static_cast<std::int32_t>(bucket);
                rec.purchased_item = purchased;
                rec.visible_items = visible;
                result.request_log->requests.push_back(std::move(rec));
            }
        }
    }

    // Emit aggregated rows in (day, bucket, item) order; gmv derived exactly
    // as transactions x effective daily price.
    for (int day = 0; day < n_days; ++day) {
        const int phase = day >= cfg.days_pre ? 1 : 0;
        for (std::size_t b = 0; b < n_buckets; ++b) {
            const std::size_t cell_base = (static_cast<std::size_t>(day) * n_buckets + b) * n_items;
            for (std::size_t i = 0; i < n_items; ++i) {
                const Cell& c = cells[cell_base + i];
                if (c.impressions == 0 && c.transactions == 0) continue;
                PanelRow row;
                row.day = day;
                row.bucket = sinking.buckets[b].label;
                row.item_id = items[i].item_id;
                row.impressions = c.impressions;
                row.transactions = c.transactions;
                row.gmv = static_cast<double>(c.transactions) * price_phase[i][phase];
                result.panel.rows.push_back(std::move(row));
            }
        }
    }
    return result;
}

// Expands a request log into a request-level panel (one row per visible item
// per request, request_id set). gmv is the effective price when that row's
// item was purchased by that request.
inline DailyPanel to_request_level_panel(const RequestLog& log, const MarketConfig& cfg,
                                         const std::optional<TreatmentPlan>& treatment) {
    std::vector<double> price1(cfg.items.size());
    for (std::size_t i = 0; i < cfg.items.size(); ++i) {
        const bool tr = treatment && treatment->target_items.count(cfg.items[i].item_id) > 0;
        price1[i] = tr ? cfg.items[i].price * treatment->price_multiplier : cfg.items[i].price;
    }
    DailyPanel panel;
    panel.request_level = true;
    for (const auto& rec : log.requests) {
        for (std::int32_t idx : rec.visible_items) {
            PanelRow row;
            row.day = rec.day;
            row.bucket = log.bucket_labels[static_cast<std::size_t>(rec.bucket_index)];
            row.item_id = cfg.items[static_cast<std::size_t>(idx)].item_id;
            row.impressions = 1;
            row.transactions = rec.purchased_item == idx ? 1 : 0;
            const double price =
                rec.day >= cfg.days_pre ? price1[static_cast<std::size_t>(idx)] : cfg.items[static_cast<std::size_t>(idx)].price;
            row.gmv = row.transactions ? price : 0.0;
            row.request_id = rec.request_id;
            panel.rows.push_back(std::move(row));
        }
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Panel helpers
// ---------------------------------------------------------------------------

inline DayRange panel_day_range(const DailyPanel& panel) {
    if (panel.rows.empty()) return {0, 0};
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    for (const auto& r : panel.rows) {
        lo = std::min(lo, r.day);
        hi = std::max(hi, r.day);
    }
    return {lo, hi + 1};
}

inline double panel_metric_total(const DailyPanel& panel, Metric metric, const DayRange& window,
                                 const std::set<std::string>* item_filter = nullptr,
                                 const std::string* bucket_filter = nullptr) {
    double total = 0.0;
    for (const auto& r : panel.rows) {
        if (!window.contains(r.day)) continue;
        if (bucket_filter && r.bucket != *bucket_filter) continue;
        if (item_filter && item_filter->count(r.item_id) == 0) continue;
        total += metric == Metric::orders ? static_cast<double>(r.transactions) : r.gmv;
    }
    return total;
}

inline std::int64_t panel_impressions(const DailyPanel& panel, const DayRange& window,
                                      const std::set<std::string>& items,
                                      const std::string* bucket_filter = nullptr) {
    std::int64_t total = 0;
    for (const auto& r : panel.rows) {
        if (!window.contains(r.day)) continue;
        if (bucket_filter && r.bucket != *bucket_filter) continue;
        if (items.count(r.item_id) == 0) continue;
        total += r.impressions;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Oracle and cannibalization measurement
// ---------------------------------------------------------------------------

// Ground-truth platform-level effect: two full-market runs sharing all demand
// shocks (identical seed, no sinking), one treated and one not; returns the
// platform-total metric difference over the post window.
inline double oracle_perfect_ab(const MarketConfig& cfg, const TreatmentPlan& treatment, Metric metric) {
    validate_treatment(treatment);
    const SinkingPlan full = SinkingPlan::single_bucket();
    const SimResult untreated = simulate(cfg, full, std::nullopt);
    const SimResult treated = simulate(cfg, full, treatment);
    const DayRange post{cfg.days_pre, cfg.total_days()};
    return panel_metric_total(treated.panel, metric, post) -
           panel_metric_total(untreated.panel, metric, post);
}

// Relative exposure change (percent) of the watched items between a panel
// simulated with some set sunk and a reference panel sharing demand shocks.
// Optionally restricted to the bucket in which the competitor set was sunk.
inline double measure_cannibalization(const DailyPanel& panel_sunk, const DailyPanel& panel_reference,
                                      const std::set<std::string>& watched,
                                      const std::optional<std::string>& bucket = std::nullopt) {
    const DayRange a = panel_day_range(panel_sunk);
    const DayRange b = panel_day_range(panel_reference);
    if (a.begin != b.begin || a.end != b.end)
        throw Error(ErrorCode::invalid_window, "panels cover different day ranges");
    const std::string* bucket_ptr = bucket ? &*bucket : nullptr;
    const std::int64_t sunk_imp = panel_impressions(panel_sunk, a, watched, bucket_ptr);
    const std::int64_t ref_imp = panel_impressions(panel_reference, b, watched, bucket_ptr);
    if (ref_imp == 0)
        throw Error(ErrorCode::undefined_rate, "watched items have zero reference impressions");
    return (static_cast<double>(sunk_imp) - static_cast<double>(ref_imp)) /
           static_cast<double>(ref_imp) * 100.0;
}

}  // namespace cipsm
