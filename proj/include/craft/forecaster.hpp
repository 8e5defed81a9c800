#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "craft/hred.hpp"

namespace craft {

enum class Outcome { TP, FP, FN, TN };

// Per-conversation forecasting record: one score per consumed comment,
// the first threshold crossing (strict >), and the aggregated decision.
struct ForecastTrace {
    std::string conversation_id;
    std::string model_name = "craft";
    std::vector<double> scores;
    double threshold = 0.5;
    std::optional<std::size_t> trigger_index;  // 1-based
    bool positive = false;

    void push_score(double p) {
        scores.push_back(p);
        if (!trigger_index && p > threshold) {
            trigger_index = scores.size();
            positive = true;
        }
    }

    double max_score() const {
        double m = 0;
        for (double s : scores) m = std::max(m, s);
        return m;
    }
};

// Pre-sigmoid output of the 3-layer MLP head.
template <typename Real>
typename Tape<Real>::Id head_logit(Tape<Real>& tape, HredModel<Real>& model,
                                   typename Tape<Real>::Id input, Real leaky_slope) {
    auto p = [&](const char* n) { return tape.param(model.params, n); };
    auto a1 = tape.leaky_relu(tape.affine(p("head.W1"), input, p("head.b1")), leaky_slope);
    auto a2 = tape.leaky_relu(tape.affine(p("head.W2"), a1, p("head.b2")), leaky_slope);
    return tape.affine(p("head.W3"), a2, p("head.b3"));
}

// In craft_minus_ce mode the head reads the latest comment's utterance
// encoding instead of the context state.
template <typename Real>
typename Tape<Real>::Id head_input(const HredModel<Real>& model,
                                   const ContextState<Real>& state) {
    if (state.con.empty()) fail(ErrorKind::data_validation, "scoring an empty context");
    return model.mode == Mode::craft_minus_ce ? state.enc.back() : state.con.back();
}

template <typename Real>
double score_comment(Tape<Real>& tape, HredModel<Real>& model,
                     const ContextState<Real>& state, Real leaky_slope = Real(0.01)) {
    auto z = head_logit(tape, model, head_input(model, state), leaky_slope);
    double zv = static_cast<double>(tape.val(z).data[0]);
    return 1.0 / (1.0 + std::exp(-zv));
}

// Fine-tuning: binary cross-entropy on the score at the final horizon
// position, with gradients flowing through the encoders. Returns the
// per-epoch mean loss.
template <typename Real>
std::vector<double> finetune(HredModel<Real>& model, const Corpus& train,
                             const Vocabulary& vocab, const RunConfig& cfg) {
    struct Example {
        std::vector<TokenSeq> context;
        Real target;
    };
    std::vector<Example> examples;
    bool has_pos = false, has_neg = false;
    for (const auto& conv : train.conversations) {
        if (!conv.labeled())
            fail(ErrorKind::data_validation, "finetune requires a labeled corpus");
        Example ex;
        ex.target = (conv.label == Label::derail) ? Real(1) : Real(0);
        (ex.target > 0 ? has_pos : has_neg) = true;
        std::size_t horizon = conv.horizon();
        for (std::size_t i = 0; i < horizon; ++i)
            ex.context.push_back(encode(conv.comments[i].text, vocab, cfg.max_tokens_per_comment));
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) fail(ErrorKind::data_validation, "empty fine-tuning corpus");
    if (!has_pos || !has_neg)
        fail(ErrorKind::data_validation, "fine-tuning needs both classes present");

    std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed) ^ 0x7f4a7c15u);
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    Real slope = static_cast<Real>(cfg.leaky_slope);
    std::vector<double> epoch_log;
    for (std::size_t epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0;
        std::size_t done = 0;
        while (done < order.size()) {
            std::size_t batch = std::min(cfg.batch_size, order.size() - done);
            for (std::size_t b = 0; b < batch; ++b) {
                const Example& ex = examples[order[done + b]];
                Tape<Real> tape;
                ContextState<Real> state;
                for (const auto& tokens : ex.context)
                    extend_context(tape, model, state, encode_utterance(tape, model, tokens));
                auto z = head_logit(tape, model, head_input(model, state), slope);
                auto loss = tape.bce_logit(z, ex.target);
                double lv = static_cast<double>(tape.val(loss).data[0]);
                if (!std::isfinite(lv))
                    fail(ErrorKind::numeric,
                         "non-finite fine-tuning loss at epoch " + std::to_string(epoch));
                epoch_loss += lv;
                tape.backward(loss, Real(1) / Real(batch));
            }
            adam_step(model.params, static_cast<Real>(cfg.lr), static_cast<Real>(cfg.clip));
            done += batch;
        }
        epoch_log.push_back(epoch_loss / double(examples.size()));
    }
    return epoch_log;
}

// Consumes the conversation's horizon comment by comment, scoring after
// each. Aggregation is monotone: the first strict threshold crossing
// fixes a positive decision.
template <typename Real>
ForecastTrace forecast(HredModel<Real>& model, const Conversation& conv,
                       const Vocabulary& vocab, const RunConfig& cfg, double threshold) {
    if (threshold <= 0 || threshold >= 1)
        fail(ErrorKind::config, "threshold must be in (0,1)");
    std::size_t horizon = conv.labeled() ? conv.horizon() : conv.comments.size();
    if (horizon == 0) fail(ErrorKind::data_validation, "empty forecast horizon: " + conv.id);

    ForecastTrace trace;
    trace.conversation_id = conv.id;
    trace.threshold = threshold;
    trace.model_name = mode_name(model.mode);
    Tape<Real> tape;
    ContextState<Real> state;
    Real slope = static_cast<Real>(cfg.leaky_slope);
    for (std::size_t i = 0; i < horizon; ++i) {
        auto tokens = encode(conv.comments[i].text, vocab, cfg.max_tokens_per_comment);
        extend_context(tape, model, state, encode_utterance(tape, model, tokens));
        trace.push_score(score_comment(tape, model, state, slope));
    }
    return trace;
}

inline Outcome classify_outcome(const ForecastTrace& trace, const Conversation& gold) {
    if (!gold.labeled()) fail(ErrorKind::data_validation, "classify_outcome needs a gold label");
    bool derail = gold.label == Label::derail;
    if (trace.positive) return derail ? Outcome::TP : Outcome::FP;
    return derail ? Outcome::FN : Outcome::TN;
}

struct ThresholdChoice {
    double threshold = 0.5;
    double f1 = 0.0;
    bool degenerate = false;  // all dev scores identical
};

// Dev-set threshold tuning: candidates are the midpoints between
// consecutive distinct observed scores plus 0.5; picks the F1 maximum,
// ties toward the larger threshold.
inline ThresholdChoice tune_threshold_from_scores(
    const std::vector<std::pair<double, bool>>& conv_max_scores /* (max score, is derail) */,
    const std::vector<double>& all_scores) {
    if (conv_max_scores.empty() || all_scores.empty())
        fail(ErrorKind::data_validation, "empty dev set for threshold tuning");

    std::vector<double> sorted = all_scores;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.size() == 1) return ThresholdChoice{0.5, 0.0, true};

    std::vector<double> candidates = {0.5};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));

    auto f1_at = [&](double th) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& [score, derail] : conv_max_scores) {
            bool pred = score > th;
            if (pred && derail) ++tp;
            else if (pred && !derail) ++fp;
            else if (!pred && derail) ++fn;
        }
        if (tp == 0) return 0.0;
        double p = double(tp) / double(tp + fp);
        double r = double(tp) / double(tp + fn);
        return 2 * p * r / (p + r);
    };

    ThresholdChoice best;
    best.threshold = candidates[0];
    best.f1 = f1_at(candidates[0]);
    for (double th : candidates) {
        if (th <= 0 || th >= 1) continue;
        double f1 = f1_at(th);
        if (f1 > best.f1 || (f1 == best.f1 && th > best.threshold)) {
            best.f1 = f1;
            best.threshold = th;
        }
    }
    return best;
}

template <typename Real>
ThresholdChoice tune_threshold(HredModel<Real>& model, const Corpus& dev,
                               const Vocabulary& vocab, const RunConfig& cfg) {
    if (dev.conversations.empty()) fail(ErrorKind::data_validation, "empty dev corpus");
    std::vector<std::pair<double, bool>> conv_scores;
    std::vector<double> all_scores;
    for (const auto& conv : dev.conversations) {
        // threshold irrelevant for score collection; any valid value works
        ForecastTrace t = forecast(model, conv, vocab, cfg, 0.5);
        conv_scores.emplace_back(t.max_score(), conv.label == Label::derail);
        all_scores.insert(all_scores.end(), t.scores.begin(), t.scores.end());
    }
    return tune_threshold_from_scores(conv_scores, all_scores);
}

}  // namespace craft
