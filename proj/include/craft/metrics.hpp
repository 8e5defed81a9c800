#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "craft/corpus.hpp"
#include "craft/forecaster.hpp"

namespace craft {

struct MetricsReport {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double accuracy = 0, precision = 0, recall = 0, fpr = 0, f1 = 0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool fpr_undefined = false;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tp"] = tp;
        j["fp"] = fp;
        j["fn"] = fn;
        j["tn"] = tn;
        j["accuracy"] = accuracy;
        j["precision"] = precision;
        j["recall"] = recall;
        j["fpr"] = fpr;
        j["f1"] = f1;
        j["precision_undefined"] = precision_undefined;
        j["recall_undefined"] = recall_undefined;
        j["fpr_undefined"] = fpr_undefined;
        return j;
    }
};

inline MetricsReport compute_metrics(const std::vector<Outcome>& outcomes) {
    if (outcomes.empty()) fail(ErrorKind::data_validation, "no outcomes to score");
    MetricsReport r;
    for (Outcome o : outcomes) {
        switch (o) {
            case Outcome::TP: ++r.tp; break;
            case Outcome::FP: ++r.fp; break;
            case Outcome::FN: ++r.fn; break;
            case Outcome::TN: ++r.tn; break;
        }
    }
    std::size_t total = r.tp + r.fp + r.fn + r.tn;
    r.accuracy = double(r.tp + r.tn) / double(total);
    if (r.tp + r.fp == 0)
        r.precision_undefined = true;
    else
        r.precision = double(r.tp) / double(r.tp + r.fp);
    if (r.tp + r.fn == 0)
        r.recall_undefined = true;
    else
        r.recall = double(r.tp) / double(r.tp + r.fn);
    if (r.fp + r.tn == 0)
        r.fpr_undefined = true;
    else
        r.fpr = double(r.fp) / double(r.fp + r.tn);
    if (r.precision + r.recall > 0)
        r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

struct PrCurve {
    // (recall, precision) swept over thresholds; recall nondecreasing.
    std::vector<std::pair<double, double>> points;
    double aupr = 0;
};

// Each conversation is summarized by its maximum per-comment score (the
// statistic the trigger rule thresholds). Thresholds sweep the distinct
// scores with the "score >= threshold" predicate; AUPR uses the
// rectangular rule over recall increments.
inline PrCurve pr_curve(const std::vector<std::pair<double, bool>>& max_scores /* (score, derail) */) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& [s, pos] : max_scores) (pos ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        fail(ErrorKind::data_validation, "PR curve needs both classes");

    std::vector<double> thresholds;
    for (const auto& [s, pos] : max_scores) thresholds.push_back(s);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    PrCurve curve;
    double prev_recall = 0;
    for (double th : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (const auto& [s, pos] : max_scores)
            if (s >= th) (pos ? tp : fp)++;
        if (tp + fp == 0) continue;
        double precision = double(tp) / double(tp + fp);
        double recall = double(tp) / double(n_pos);
        curve.points.emplace_back(recall, precision);
        curve.aupr += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return curve;
}

struct WarningGapReport {
    std::size_t n_tp = 0;
    double mean_comment_gap = 0;
    double median_comment_gap = 0;
    double frac_time_gap_at_least_h = 0;
    std::int64_t horizon_seconds = 43200;  // 12h default
    std::vector<std::size_t> comment_gaps;
    std::vector<std::int64_t> time_gaps;
    bool empty = false;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["n_tp"] = n_tp;
        j["empty"] = empty;
        j["mean_comment_gap"] = mean_comment_gap;
        j["median_comment_gap"] = median_comment_gap;
        j["horizon_seconds"] = horizon_seconds;
        j["frac_time_gap_at_least_h"] = frac_time_gap_at_least_h;
        j["comment_gaps"] = comment_gaps;
        j["time_gaps"] = time_gaps;
        return j;
    }
};

// Early-warning gaps over true positives: comments and seconds between
// the trigger comment and the attack.
inline WarningGapReport warning_gaps(const std::vector<ForecastTrace>& traces,
                                     const std::vector<Conversation>& gold,
                                     std::int64_t horizon_seconds = 43200) {
    if (traces.size() != gold.size())
        fail(ErrorKind::data_validation, "traces and gold corpus differ in size");
    WarningGapReport r;
    r.horizon_seconds = horizon_seconds;
    std::size_t over_h = 0;
    double sum = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& t = traces[i];
        const auto& c = gold[i];
        if (!t.positive || c.label != Label::derail) continue;
        std::size_t attack = *c.attack_index;
        std::size_t trigger = *t.trigger_index;
        if (trigger >= attack)
            fail(ErrorKind::data_validation,
                 "trigger at or after the attack in '" + c.id + "' (horizon rule violated)");
        std::size_t gap = attack - trigger;
        std::int64_t tgap =
            c.comments[attack - 1].timestamp - c.comments[trigger - 1].timestamp;
        r.comment_gaps.push_back(gap);
        r.time_gaps.push_back(tgap);
        sum += double(gap);
        if (tgap >= horizon_seconds) ++over_h;
    }
    r.n_tp = r.comment_gaps.size();
    if (r.n_tp == 0) {
        r.empty = true;
        return r;
    }
    r.mean_comment_gap = sum / double(r.n_tp);
    std::vector<std::size_t> sorted = r.comment_gaps;
    std::sort(sorted.begin(), sorted.end());
    r.median_comment_gap =
        sorted.size() % 2 ? double(sorted[sorted.size() / 2])
                          : 0.5 * double(sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    r.frac_time_gap_at_least_h = double(over_h) / double(r.n_tp);
    return r;
}

}  // namespace craft
