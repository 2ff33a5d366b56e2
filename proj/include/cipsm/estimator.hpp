// Experiment design (grouping + two-sided sinking), DID estimation, and the
// end-to-end pipelines: competitive-isolation PSM-DID, its matching
// ablations, and the naive no-isolation baseline.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cipsm/errors.hpp"
#include "cipsm/graph.hpp"
#include "cipsm/market.hpp"
#include "cipsm/matching.hpp"
#include "cipsm/partition.hpp"

namespace cipsm {

// ---------------------------------------------------------------------------
// Design
// ---------------------------------------------------------------------------

struct ExperimentDesign {
    std::set<std::string> group_a;  // treated targets (side A)
    std::set<std::string> group_b;  // control targets (side B)
    std::set<std::string> c_a;      // homogeneous set observed with A (side A)
    std::set<std::string> c_b;      // homogeneous set observed with B (side B)
    SinkingPlan sinking;            // control bucket sinks A, treatment bucket sinks B
    std::vector<std::string> warnings;
};

inline constexpr const char* kControlBucket = "control";
inline constexpr const char* kTreatmentBucket = "treatment";

struct DesignOptions {
    double treatment_bucket_share = 0.5;
};

// Alg-style grouping: A/B are the targets split by partition side; the
// homogeneous set observed alongside each group collects the opposite-side
// matches of the other group's targets.
inline ExperimentDesign build_design(const std::set<std::string>& targets, const Partition& partition,
                                     const MatchReport& matches, const DesignOptions& opts = {}) {
    if (!(opts.treatment_bucket_share > 0.0) || !(opts.treatment_bucket_share < 1.0))
        throw Error(ErrorCode::invalid_config, "treatment_bucket_share must be in (0, 1)");

    ExperimentDesign design;
    for (const auto& t : targets) {
        if (partition.in_side_a(t))
            design.group_a.insert(t);
        else if (partition.in_side_b(t))
            design.group_b.insert(t);
        else
            throw Error(ErrorCode::invalid_input, "target " + t + " not covered by partition");
    }
    if (design.group_a.empty() || design.group_b.empty())
        throw Error(ErrorCode::degenerate_design,
                    "targets fall on a single partition side; no control group possible");

    for (const auto& [target, match] : matches.matched) {
        if (targets.count(target) == 0) continue;
        const bool target_in_a = design.group_a.count(target) > 0;
        for (const auto& member : match.members) {
            const bool member_in_a = partition.in_side_a(member);
            if (member_in_a == target_in_a)
                throw Error(ErrorCode::invalid_input,
                            "match for " + target + " contains same-side member " + member);
            // Matches of side-B targets live on side A and join C_A; mirrored for C_B.
            (target_in_a ? design.c_b : design.c_a).insert(member);
        }
    }
    if (design.c_a.empty() && design.c_b.empty())
        design.warnings.push_back("no homogeneous items matched; DID will compare bare target groups");

    SinkingBucket control{kControlBucket, 1.0 - opts.treatment_bucket_share, design.group_a};
    SinkingBucket treatment{kTreatmentBucket, opts.treatment_bucket_share, design.group_b};
    design.sinking.buckets = {control, treatment};
    return design;
}

// ---------------------------------------------------------------------------
// DID arithmetic
// ---------------------------------------------------------------------------

struct DidInputs {
    double y_pre_a = 0.0;
    double y_pre_b = 0.0;
    double y_post_a = 0.0;
    double y_post_b = 0.0;
};

// (post-diff) - (pre-diff), exact arithmetic.
inline double did_estimate(const DidInputs& in) {
    for (double v : {in.y_pre_a, in.y_pre_b, in.y_post_a, in.y_post_b})
        if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "DID inputs must be finite");
    return (in.y_post_a - in.y_post_b) - (in.y_pre_a - in.y_pre_b);
}

// ---------------------------------------------------------------------------
// Effect estimates
// ---------------------------------------------------------------------------

enum class EstimatorMethod { ci_ctcvr, ci_stratified_random, ci_random, naive };

inline const char* method_name(EstimatorMethod m) {
    switch (m) {
        case EstimatorMethod::ci_ctcvr: return "ci_ctcvr";
        case EstimatorMethod::ci_stratified_random: return "ci_stratified_random";
        case EstimatorMethod::ci_random: return "ci_random";
        case EstimatorMethod::naive: return "naive";
    }
    return "unknown";
}

inline EstimatorMethod method_from_name(const std::string& s) {
    if (s == "ci_ctcvr") return EstimatorMethod::ci_ctcvr;
    if (s == "ci_stratified_random") return EstimatorMethod::ci_stratified_random;
    if (s == "ci_random") return EstimatorMethod::ci_random;
    if (s == "naive") return EstimatorMethod::naive;
    throw Error(ErrorCode::invalid_config, "unknown estimator method '" + s + "'");
}

struct DesignSummary {
    std::size_t n_group_a = 0;
    std::size_t n_group_b = 0;
    std::size_t n_c_a = 0;
    std::size_t n_c_b = 0;
    std::size_t matched_targets = 0;
    std::size_t unmatched_targets = 0;
    double cut_capacity = std::numeric_limits<double>::quiet_NaN();  // NaN for naive
    double mean_pre_gap_relative = std::numeric_limits<double>::quiet_NaN();
};

struct EffectEstimate {
    std::string method;
    std::uint64_t seed = 0;
    double tau_hat = 0.0;
    std::optional<double> oracle_delta_star;
    std::optional<double> abs_error;  // |tau_hat - oracle|
    std::optional<double> rel_error;  // percent of |oracle|; absent when oracle is 0 or absent
    DidInputs inputs;                 // per-request normalized group metrics
    DesignSummary summary;
};

struct PipelineOptions {
    Metric metric = Metric::orders;
    BalanceConstraints constraints;
    KlOptions kl;
    StratificationConfig stratification;
    int k_max = 10;
    bool laplace_smoothing = false;
    double treatment_bucket_share = 0.5;
    bool attach_oracle = true;
    // Evaluate the DID entirely inside T0 with no treatment applied
    // (pre-period placebo; requires days_pre >= 2).
    bool placebo = false;
};

// Everything a pipeline run produces beyond the estimate itself.
struct PipelineResult {
    EffectEstimate estimate;
    ExperimentDesign design;
    std::optional<Partition> partition;  // absent for the naive method
    MatchReport matches;
};

namespace detail {

inline double normalized_group_metric(const DailyPanel& panel, Metric metric,
                                      const std::set<std::string>& items, const std::string& bucket,
                                      const DayRange& window, double bucket_share,
                                      std::int64_t requests_per_day) {
    const double total = panel_metric_total(panel, metric, window, &items, &bucket);
    const double expected_requests =
        bucket_share * static_cast<double>(requests_per_day) * static_cast<double>(window.length());
    return total / expected_requests;
}

inline void attach_oracle(EffectEstimate& est, const MarketConfig& cfg, const TreatmentPlan& plan,
                          Metric metric) {
    const double delta = oracle_perfect_ab(cfg, plan, metric);
    est.oracle_delta_star = delta;
    est.abs_error = std::abs(est.tau_hat - delta);
    if (delta != 0.0) est.rel_error = *est.abs_error / std::abs(delta) * 100.0;
}

inline MatchOptions match_options_for(EstimatorMethod method, const PipelineOptions& opts,
                                      std::uint64_t seed) {
    MatchOptions mo;
    mo.metric = opts.metric;
    mo.k_max = opts.k_max;
    mo.laplace_smoothing = opts.laplace_smoothing;
    mo.stratification = opts.stratification;
    mo.shuffle_seed = hash_mix(seed, 0x5eed5);
    switch (method) {
        case EstimatorMethod::ci_ctcvr:
            mo.ordering = CandidateOrdering::ctcvr_distance;
            mo.use_strata = true;
            break;
        case EstimatorMethod::ci_stratified_random:
            mo.ordering = CandidateOrdering::random;
            mo.use_strata = true;
            break;
        case EstimatorMethod::ci_random:
            mo.ordering = CandidateOrdering::random;
            mo.use_strata = false;
            break;
        case EstimatorMethod::naive:
            mo.ordering = CandidateOrdering::random;
            mo.use_strata = false;  // coarse category filter applied to the pool instead
            break;
    }
    return mo;
}

// Naive matching: candidates share the target's level-1 category only and are
// picked at random (no partition, no finer strata).
inline MatchReport naive_match_all(const MatchContext& ctx, const std::set<std::string>& targets,
                                   const std::vector<ItemSpec>& catalog, const MatchOptions& opts) {
    std::map<std::string, std::vector<std::string>> by_top_level;
    std::map<std::string, std::string> top_level_of;
    for (const auto& item : catalog) {
        top_level_of[item.item_id] = item.category_path[0];
        if (targets.count(item.item_id) == 0) by_top_level[item.category_path[0]].push_back(item.item_id);
    }
    MatchReport report;
    for (const auto& target : targets) {
        auto pool = by_top_level.find(top_level_of.at(target));
        if (pool == by_top_level.end() || pool->second.empty()) {
            report.unmatched.push_back({target, ErrorCode::no_candidates, "no same-category candidates"});
            continue;
        }
        try {
            report.matched.emplace(target, match_item(ctx, target, pool->second, opts));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::no_candidates)
                report.unmatched.push_back({target, e.code(), e.what()});
            else
                throw;
        }
    }
    return report;
}

}  // namespace detail

// Runs the selected estimator end-to-end on simulated data:
//   1. a full-market history run over the whole horizon (shared demand shocks
//      with every other run through the config seed),
//   2. competition graph over T0 plus balanced min-cut partition (CI methods),
//   3. homogeneous matching per method,
//   4. a measurement run under the design's sinking with the treatment
//      applied to group A from day days_pre onward, and the four group
//      metrics folded into the DID.
// tau_hat is reported on the platform post-window scale so it is directly
// comparable with the attached perfect-A/B oracle for the same realized
// intervention (group A for CI methods, the full target set for naive).
inline PipelineResult run_pipeline(EstimatorMethod method, const MarketConfig& cfg,
                                   const TreatmentPlan& treatment, const PipelineOptions& opts = {}) {
    validate_config(cfg);
    validate_treatment(treatment);
    if (treatment.target_items.empty())
        throw Error(ErrorCode::invalid_config, "treatment needs at least one target item");
    if (opts.placebo && cfg.days_pre < 2)
        throw Error(ErrorCode::invalid_config, "placebo evaluation needs days_pre >= 2");

    const DayRange t0{0, cfg.days_pre};
    const DayRange t1{cfg.days_pre, cfg.total_days()};
    const bool is_ci = method != EstimatorMethod::naive;

    // Phase 0: history (also the untreated full-market twin).
    CoExposureCounter co_counter(t0);
    SimulateOptions sim_opts;
    sim_opts.co_exposure = is_ci ? &co_counter : nullptr;
    const SimResult hist = simulate(cfg, SinkingPlan::single_bucket(), std::nullopt, sim_opts);

    PipelineResult result;
    EffectEstimate& est = result.estimate;
    est.method = method_name(method);
    est.seed = cfg.rng_seed;

    const MatchContext ctx(hist.panel, t0, cfg.items);
    const MatchOptions match_opts = detail::match_options_for(method, opts, cfg.rng_seed);

    if (is_ci) {
        // Phases 1-2: partition and opposite-side matching.
        const CompetitionGraph graph = build_graph(hist.panel, co_counter, t0, cfg.items);
        result.partition = kl_partition(graph, opts.constraints, hash_mix(cfg.rng_seed, 0x9a27), opts.kl);
        est.summary.cut_capacity = normalized_cut_capacity(graph, *result.partition);
        result.matches = match_all(ctx, treatment.target_items, *result.partition, match_opts);

        // Phase 3: grouping and two-sided sinking.
        result.design = build_design(treatment.target_items, *result.partition, result.matches,
                                     {opts.treatment_bucket_share});

        // Phase 4: measurement run; only group A is treated.
        TreatmentPlan applied;
        applied.target_items = result.design.group_a;
        applied.price_multiplier = treatment.price_multiplier;
        const std::optional<TreatmentPlan> meas_treatment =
            opts.placebo ? std::nullopt : std::optional<TreatmentPlan>(applied);
        const SimResult meas = simulate(cfg, result.design.sinking, meas_treatment);

        std::set<std::string> obs_a = result.design.group_a;
        obs_a.insert(result.design.c_a.begin(), result.design.c_a.end());
        std::set<std::string> obs_b = result.design.group_b;
        obs_b.insert(result.design.c_b.begin(), result.design.c_b.end());

        const DayRange pre = opts.placebo ? DayRange{0, cfg.days_pre / 2} : t0;
        const DayRange post = opts.placebo ? DayRange{cfg.days_pre / 2, cfg.days_pre} : t1;
        const double share_t = opts.treatment_bucket_share;
        const double share_c = 1.0 - share_t;
        est.inputs.y_pre_a = detail::normalized_group_metric(meas.panel, opts.metric, obs_a,
                                                             kTreatmentBucket, pre, share_t,
                                                             cfg.requests_per_day);
        est.inputs.y_pre_b = detail::normalized_group_metric(meas.panel, opts.metric, obs_b,
                                                             kControlBucket, pre, share_c,
                                                             cfg.requests_per_day);
        est.inputs.y_post_a = detail::normalized_group_metric(meas.panel, opts.metric, obs_a,
                                                              kTreatmentBucket, post, share_t,
                                                              cfg.requests_per_day);
        est.inputs.y_post_b = detail::normalized_group_metric(meas.panel, opts.metric, obs_b,
                                                              kControlBucket, post, share_c,
                                                              cfg.requests_per_day);
        est.tau_hat = did_estimate(est.inputs) * static_cast<double>(cfg.requests_per_day) *
                      static_cast<double>(post.length());

        if (opts.attach_oracle && !opts.placebo) detail::attach_oracle(est, cfg, applied, opts.metric);
    } else {
        // Naive baseline: no partition, no sinking, coarse category matching;
        // the full target set is treated and measured in the full market.
        result.matches = detail::naive_match_all(ctx, treatment.target_items, cfg.items, match_opts);
        result.design.group_a = treatment.target_items;
        for (const auto& [target, match] : result.matches.matched)
            result.design.group_b.insert(match.members.begin(), match.members.end());
        if (result.design.group_b.empty())
            throw Error(ErrorCode::degenerate_design, "naive matching produced no control items");
        result.design.sinking = SinkingPlan::single_bucket();

        const std::optional<TreatmentPlan> meas_treatment =
            opts.placebo ? std::nullopt : std::optional<TreatmentPlan>(treatment);
        const SimResult meas = simulate(cfg, result.design.sinking, meas_treatment);

        const DayRange pre = opts.placebo ? DayRange{0, cfg.days_pre / 2} : t0;
        const DayRange post = opts.placebo ? DayRange{cfg.days_pre / 2, cfg.days_pre} : t1;
        const std::string bucket = result.design.sinking.buckets[0].label;
        est.inputs.y_pre_a = detail::normalized_group_metric(meas.panel, opts.metric, result.design.group_a,
                                                             bucket, pre, 1.0, cfg.requests_per_day);
        est.inputs.y_pre_b = detail::normalized_group_metric(meas.panel, opts.metric, result.design.group_b,
                                                             bucket, pre, 1.0, cfg.requests_per_day);
        est.inputs.y_post_a = detail::normalized_group_metric(meas.panel, opts.metric, result.design.group_a,
                                                              bucket, post, 1.0, cfg.requests_per_day);
        est.inputs.y_post_b = detail::normalized_group_metric(meas.panel, opts.metric, result.design.group_b,
                                                              bucket, post, 1.0, cfg.requests_per_day);
        est.tau_hat = did_estimate(est.inputs) * static_cast<double>(cfg.requests_per_day) *
                      static_cast<double>(post.length());

        if (opts.attach_oracle && !opts.placebo) detail::attach_oracle(est, cfg, treatment, opts.metric);
    }

    est.summary.n_group_a = result.design.group_a.size();
    est.summary.n_group_b = result.design.group_b.size();
    est.summary.n_c_a = result.design.c_a.size();
    est.summary.n_c_b = result.design.c_b.size();
    est.summary.matched_targets = result.matches.matched.size();
    est.summary.unmatched_targets = result.matches.unmatched.size();
    est.summary.mean_pre_gap_relative = result.matches.mean_pre_gap_relative();
    return result;
}

inline PipelineResult run_ci_psm_did(const MarketConfig& cfg, const TreatmentPlan& treatment,
                                     const PipelineOptions& opts = {}) {
    return run_pipeline(EstimatorMethod::ci_ctcvr, cfg, treatment, opts);
}

inline PipelineResult run_naive_psm_did(const MarketConfig& cfg, const TreatmentPlan& treatment,
                                        const PipelineOptions& opts = {}) {
    return run_pipeline(EstimatorMethod::naive, cfg, treatment, opts);
}

inline PipelineResult run_ablation(EstimatorMethod variant, const MarketConfig& cfg,
                                   const TreatmentPlan& treatment, const PipelineOptions& opts = {}) {
    if (variant != EstimatorMethod::ci_random && variant != EstimatorMethod::ci_stratified_random)
        throw Error(ErrorCode::invalid_config, "ablation variant must be ci_random or ci_stratified_random");
    return run_pipeline(variant, cfg, treatment, opts);
}

}  // namespace cipsm
