#pragma once

#include <functional>
#include <random>
#include <vector>

#include "craft/pipeline.hpp"

namespace craft {

// Scores the last comment of `texts` given the preceding ones as context.
using PrefixScorer = std::function<double(const std::vector<std::string>& texts)>;

template <typename Real>
PrefixScorer make_craft_scorer(HredModel<Real>& model, const Vocabulary& vocab,
                               const RunConfig& cfg) {
    return [&model, &vocab, cfg](const std::vector<std::string>& texts) {
        Tape<Real> tape;
        ContextState<Real> state;
        for (const auto& text : texts) {
            auto tokens = encode(text, vocab, cfg.max_tokens_per_comment);
            extend_context(tape, model, state, encode_utterance(tape, model, tokens));
        }
        return score_comment(tape, model, state, static_cast<Real>(cfg.leaky_slope));
    };
}

inline PrefixScorer make_bow_scorer(const BowForecaster& bow) {
    return [&bow](const std::vector<std::string>& texts) {
        Conversation c;
        c.id = "prefix";
        for (std::size_t i = 0; i < texts.size(); ++i)
            c.comments.push_back({"c" + std::to_string(i), "u", std::int64_t(i), texts[i]});
        return bow.score_at(c, texts.size());
    };
}

struct PrefixShuffleResult {
    std::size_t eligible = 0;  // predicted positives with trigger index >= 3
    std::size_t flipped = 0;   // prediction at index t changed at least once
    double flip_rate = 0;
};

// For each predicted-positive conversation with trigger index t >= 3,
// rescore comment t after sampling uniform permutations of the prefix
// c_1..c_{t-1}; counts how often the prediction at t changes.
inline PrefixShuffleResult prefix_shuffle_experiment(
    const PrefixScorer& scorer, const std::vector<ForecastTrace>& traces,
    const std::vector<Conversation>& convs, std::size_t n_shuffles, std::uint64_t seed) {
    if (traces.size() != convs.size())
        fail(ErrorKind::data_validation, "traces and conversations differ in size");
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    PrefixShuffleResult res;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& trace = traces[i];
        if (!trace.positive || *trace.trigger_index < 3) continue;
        ++res.eligible;
        std::size_t t = *trace.trigger_index;
        std::vector<std::string> texts(t);
        for (std::size_t k = 0; k < t; ++k) texts[k] = convs[i].comments[k].text;
        bool flipped = false;
        std::vector<std::size_t> perm(t - 1);
        for (std::size_t k = 0; k + 1 < t; ++k) perm[k] = k;
        for (std::size_t s = 0; s < n_shuffles && !flipped; ++s) {
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<std::string> shuffled(t);
            for (std::size_t k = 0; k + 1 < t; ++k) shuffled[k] = texts[perm[k]];
            shuffled[t - 1] = texts[t - 1];
            double score = scorer(shuffled);
            if (!(score > trace.threshold)) flipped = true;
        }
        if (flipped) ++res.flipped;
    }
    if (res.eligible == 0)
        fail(ErrorKind::data_validation, "no eligible conversations for prefix shuffling");
    res.flip_rate = double(res.flipped) / double(res.eligible);
    return res;
}

// Within-conversation shuffle of the horizon comments (the event comment
// stays in place); timestamps keep their original ascending sequence.
inline Corpus shuffle_corpus(const Corpus& corpus, std::uint64_t seed) {
    std::mt19937 rng(static_cast<std::uint32_t>(seed) ^ 0x5bd1e995u);
    Corpus out = corpus;
    for (auto& conv : out.conversations) {
        std::size_t h = conv.labeled() ? conv.horizon() : conv.comments.size();
        std::vector<std::size_t> perm(h);
        for (std::size_t i = 0; i < h; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Comment> shuffled(conv.comments.begin(), conv.comments.begin() + h);
        for (std::size_t i = 0; i < h; ++i) {
            const Comment& src = shuffled[perm[i]];
            conv.comments[i].text = src.text;
            conv.comments[i].author = src.author;
            conv.comments[i].id = src.id;
            // timestamps stay in place to keep the ordering invariant
        }
    }
    return out;
}

struct FullShuffleResult {
    MetricsReport craft;
    MetricsReport shuffled_craft;
    MetricsReport craft_minus_ce;
    MetricsReport bow_cumulative;
    MetricsReport shuffled_bow_cumulative;
};

// Repeats the full pretrain -> finetune -> evaluate pipeline with comment
// order shuffled everywhere, side by side with the unshuffled run and the
// context-encoder ablation.
template <typename Real>
FullShuffleResult full_shuffle_experiment(const Corpus& unlabeled, const Corpus& train,
                                          const Corpus& dev, const Corpus& test,
                                          const RunConfig& cfg, std::uint64_t shuffle_seed) {
    FullShuffleResult res;
    res.craft = run_pipeline<Real>(unlabeled, train, dev, test, cfg).metrics;

    Corpus s_unlabeled = shuffle_corpus(unlabeled, shuffle_seed);
    Corpus s_train = shuffle_corpus(train, shuffle_seed + 1);
    Corpus s_dev = shuffle_corpus(dev, shuffle_seed + 2);
    Corpus s_test = shuffle_corpus(test, shuffle_seed + 3);
    res.shuffled_craft = run_pipeline<Real>(s_unlabeled, s_train, s_dev, s_test, cfg).metrics;

    RunConfig ce_cfg = cfg;
    ce_cfg.mode = Mode::craft_minus_ce;
    res.craft_minus_ce = run_pipeline<Real>(unlabeled, train, dev, test, ce_cfg).metrics;

    res.bow_cumulative = run_baseline(BowKind::cumulative, 0, train, dev, test).metrics;
    res.shuffled_bow_cumulative =
        run_baseline(BowKind::cumulative, 0, s_train, s_dev, s_test).metrics;
    return res;
}

}  // namespace craft
