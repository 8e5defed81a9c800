#pragma once

#include <vector>

#include "craft/baselines.hpp"
#include "craft/config.hpp"
#include "craft/forecaster.hpp"
#include "craft/hred.hpp"
#include "craft/metrics.hpp"
#include "craft/split.hpp"
#include "craft/vocab.hpp"

namespace craft {

template <typename Real>
struct PipelineOutput {
    HredModel<Real> model;
    Vocabulary vocab;
    std::vector<double> pretrain_log;
    std::vector<double> finetune_log;
    ThresholdChoice threshold;
    std::vector<ForecastTrace> test_traces;
    MetricsReport metrics;
};

// pretrain (unless no_pretrain) -> finetune -> tune threshold on dev ->
// forecast and score the test split.
template <typename Real>
PipelineOutput<Real> run_pipeline(const Corpus& unlabeled, const Corpus& train,
                                  const Corpus& dev, const Corpus& test,
                                  const RunConfig& cfg) {
    cfg.validate();
    PipelineOutput<Real> out;
    out.vocab = build_vocab(unlabeled, cfg.min_freq);
    out.model = HredModel<Real>::init(cfg, out.vocab.size());
    if (cfg.mode != Mode::no_pretrain)
        out.pretrain_log = pretrain(out.model, unlabeled, out.vocab, cfg);
    out.finetune_log = finetune(out.model, train, out.vocab, cfg);
    out.threshold = tune_threshold(out.model, dev, out.vocab, cfg);

    std::vector<Outcome> outcomes;
    for (const auto& conv : test.conversations) {
        ForecastTrace t = forecast(out.model, conv, out.vocab, cfg, out.threshold.threshold);
        outcomes.push_back(classify_outcome(t, conv));
        out.test_traces.push_back(std::move(t));
    }
    out.metrics = compute_metrics(outcomes);
    return out;
}

struct BaselineOutput {
    BowForecaster model;
    ThresholdChoice threshold;
    std::vector<ForecastTrace> test_traces;
    MetricsReport metrics;
};

inline BaselineOutput run_baseline(BowKind kind, std::size_t window, const Corpus& train,
                                   const Corpus& dev, const Corpus& test) {
    BaselineOutput out{BowForecaster::fit(kind, window, train), {}, {}, {}};
    out.threshold = out.model.tune(dev);
    std::vector<Outcome> outcomes;
    for (const auto& conv : test.conversations) {
        ForecastTrace t = out.model.trace(conv, out.threshold.threshold);
        outcomes.push_back(classify_outcome(t, conv));
        out.test_traces.push_back(std::move(t));
    }
    out.metrics = compute_metrics(outcomes);
    return out;
}

}  // namespace craft
