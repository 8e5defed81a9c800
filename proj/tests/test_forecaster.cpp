#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "craft/forecaster.hpp"
#include "craft/synthetic.hpp"

using namespace craft;

namespace {

RunConfig tiny_config(Mode mode = Mode::craft) {
    RunConfig cfg;
    cfg.embed_dim = 8;
    cfg.utt_hidden = 10;
    cfg.ctx_hidden = 10;
    cfg.mlp_hidden = 6;
    cfg.min_freq = 1;
    cfg.seed = 4;
    cfg.mode = mode;
    return cfg;
}

Conversation make_conv(const std::vector<std::string>& texts,
                       std::optional<std::size_t> attack = std::nullopt) {
    Conversation c;
    c.id = "t";
    for (std::size_t i = 0; i < texts.size(); ++i)
        c.comments.push_back({"c" + std::to_string(i), "u", std::int64_t(100 * i), texts[i]});
    if (attack) {
        c.label = Label::derail;
        c.attack_index = attack;
    } else {
        c.label = Label::civil;
    }
    return c;
}

}  // namespace

TEST_CASE("trace trigger rule") {
    SECTION("first strict crossing wins and sticks") {
        ForecastTrace t;
        t.threshold = 0.5;
        for (double s : {0.2, 0.7, 0.9, 0.1}) t.push_score(s);
        CHECK(t.positive);
        CHECK(*t.trigger_index == 2);
        CHECK(t.max_score() == 0.9);
    }
    SECTION("a score exactly at the threshold does not trigger") {
        ForecastTrace t;
        t.threshold = 0.5;
        for (double s : {0.5, 0.5, 0.5}) t.push_score(s);
        CHECK_FALSE(t.positive);
        CHECK_FALSE(t.trigger_index.has_value());
    }
}

TEST_CASE("zeroed head scores exactly one half") {
    auto model = HredModel<double>::init(tiny_config(), 16);
    for (const char* n : {"head.W1", "head.b1", "head.W2", "head.b2", "head.W3", "head.b3"})
        for (auto& v : model.params.value(n).data) v = 0.0;
    Tape<double> tape;
    ContextState<double> state;
    extend_context(tape, model, state, encode_utterance(tape, model, {4, 5, 2}));
    CHECK(score_comment(tape, model, state) == 0.5);
}

TEST_CASE("forecast respects the horizon") {
    Corpus corpus = generate_synthetic(8, 6, CorpusKind::unlabeled);
    RunConfig cfg = tiny_config();
    Vocabulary vocab = build_vocab(corpus, 1);
    auto model = HredModel<float>::init(cfg, vocab.size());

    SECTION("derail conversations stop before the attack") {
        Conversation c = make_conv({"a b", "c d", "e f", "attack"}, 4);
        ForecastTrace t = forecast(model, c, vocab, cfg, 0.5);
        CHECK(t.scores.size() == 3);
    }
    SECTION("civil conversations stop before the last comment") {
        Conversation c = make_conv({"a b", "c d", "e f", "g h"});
        ForecastTrace t = forecast(model, c, vocab, cfg, 0.5);
        CHECK(t.scores.size() == 3);
    }
    SECTION("threshold must be strictly inside (0,1)") {
        Conversation c = make_conv({"a b", "c d"});
        CHECK_THROWS_AS(forecast(model, c, vocab, cfg, 0.0), Error);
        CHECK_THROWS_AS(forecast(model, c, vocab, cfg, 1.0), Error);
    }
}

TEST_CASE("ablated model ignores comment order in the prefix") {
    Corpus corpus = generate_synthetic(8, 6, CorpusKind::unlabeled);
    RunConfig cfg = tiny_config(Mode::craft_minus_ce);
    Vocabulary vocab = build_vocab(corpus, 1);
    auto model = HredModel<double>::init(cfg, vocab.size());

    auto score_after = [&](const std::vector<std::string>& texts) {
        Tape<double> tape;
        ContextState<double> state;
        for (const auto& text : texts)
            extend_context(tape, model, state,
                           encode_utterance(tape, model, encode(text, vocab, 40)));
        return score_comment(tape, model, state);
    };
    double a = score_after({"tree rock", "lake wind", "moss sand"});
    double b = score_after({"lake wind", "tree rock", "moss sand"});
    CHECK(a == b);  // bitwise: the head reads only the latest utterance

    // the full model, by contrast, is order sensitive
    RunConfig full_cfg = tiny_config(Mode::craft);
    auto full = HredModel<double>::init(full_cfg, vocab.size());
    auto full_score = [&](const std::vector<std::string>& texts) {
        Tape<double> tape;
        ContextState<double> state;
        for (const auto& text : texts)
            extend_context(tape, model, state,
                           encode_utterance(tape, full, encode(text, vocab, 40)));
        return score_comment(tape, full, state);
    };
    CHECK(full_score({"tree rock", "lake wind", "moss sand"}) !=
          full_score({"lake wind", "tree rock", "moss sand"}));
}

TEST_CASE("fine-tuning learns a separable final-comment signal") {
    // derail horizons end in "flare", civil in "calm"; everything else is
    // shared filler
    Corpus train;
    train.kind = CorpusKind::labeled;
    for (int i = 0; i < 10; ++i) {
        bool derail = i % 2 == 0;
        Conversation c;
        c.id = "tr" + std::to_string(i);
        c.comments.push_back({"c0", "u", 0, "tree lake wind"});
        c.comments.push_back({"c1", "u", 100, derail ? "rock flare" : "rock calm"});
        c.comments.push_back({"c2", "u", 200, derail ? "attack" : "moss sand"});
        c.label = derail ? Label::derail : Label::civil;
        if (derail) c.attack_index = 3;
        train.conversations.push_back(c);
    }
    RunConfig cfg = tiny_config();
    cfg.finetune_epochs = 120;
    cfg.lr = 5e-3;
    cfg.batch_size = 10;
    Vocabulary vocab = build_vocab(train, 1);
    auto model = HredModel<float>::init(cfg, vocab.size());
    // from the default (tiny) init the context vectors are too small for
    // the head to pick up a signal — that is what pre-training fixes in
    // the full pipeline. Start from a larger-scale init here instead.
    std::mt19937 rng(21);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    for (auto& [name, value] : model.params.values)
        for (auto& v : value.data) v = dist(rng);
    Mat<float> utt_before = model.params.value("utt.Wz");

    auto log = finetune(model, train, vocab, cfg);
    CHECK(log.back() < log.front());
    CHECK(log.back() < 0.1);

    // gradients reached the encoders, not just the head
    CHECK(model.params.value("utt.Wz").data != utt_before.data);

    // only the final horizon position is supervised; compare scores there
    double pos = forecast(model, train.conversations[0], vocab, cfg, 0.5).scores.back();
    double neg = forecast(model, train.conversations[1], vocab, cfg, 0.5).scores.back();
    CHECK(pos > 0.8);
    CHECK(neg < 0.2);
}

TEST_CASE("fine-tuning input validation") {
    RunConfig cfg = tiny_config();
    Corpus corpus;
    corpus.kind = CorpusKind::labeled;
    Conversation c = make_conv({"a b", "c d", "attack"}, 3);
    corpus.conversations.push_back(c);
    Vocabulary vocab = build_vocab(corpus, 1);
    auto model = HredModel<float>::init(cfg, vocab.size());
    // one class only
    CHECK_THROWS_AS(finetune(model, corpus, vocab, cfg), Error);
    // unlabeled conversations
    Corpus unlabeled;
    Conversation u;
    u.id = "u";
    u.comments = c.comments;
    unlabeled.conversations.push_back(u);
    CHECK_THROWS_AS(finetune(model, unlabeled, vocab, cfg), Error);
}

TEST_CASE("classify_outcome covers all four cells") {
    Conversation derail = make_conv({"a", "b", "attack"}, 3);
    Conversation civil = make_conv({"a", "b", "c"});
    ForecastTrace pos, neg;
    pos.threshold = neg.threshold = 0.5;
    pos.push_score(0.9);
    neg.push_score(0.1);
    CHECK(classify_outcome(pos, derail) == Outcome::TP);
    CHECK(classify_outcome(pos, civil) == Outcome::FP);
    CHECK(classify_outcome(neg, derail) == Outcome::FN);
    CHECK(classify_outcome(neg, civil) == Outcome::TN);
}

TEST_CASE("threshold tuning") {
    SECTION("perfectly separable scores reach F1 1.0") {
        std::vector<std::pair<double, bool>> conv = {
            {0.9, true}, {0.8, true}, {0.3, false}, {0.2, false}};
        std::vector<double> all = {0.9, 0.8, 0.3, 0.2, 0.1};
        auto choice = tune_threshold_from_scores(conv, all);
        CHECK(choice.f1 == 1.0);
        CHECK(choice.threshold > 0.3);
        CHECK(choice.threshold < 0.8);
        CHECK_FALSE(choice.degenerate);
    }
    SECTION("identical scores fall back to 0.5") {
        std::vector<std::pair<double, bool>> conv = {{0.4, true}, {0.4, false}};
        std::vector<double> all = {0.4, 0.4, 0.4};
        auto choice = tune_threshold_from_scores(conv, all);
        CHECK(choice.degenerate);
        CHECK(choice.threshold == 0.5);
    }
    SECTION("chosen F1 matches a dense grid search") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dist(0.05, 0.95);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::pair<double, bool>> conv;
            std::vector<double> all;
            int n = 6 + int(rng() % 10);
            for (int i = 0; i < n; ++i) {
                double s = dist(rng);
                conv.emplace_back(s, rng() % 2 == 0);
                all.push_back(s);
            }
            auto choice = tune_threshold_from_scores(conv, all);

            auto f1_at = [&](double th) {
                std::size_t tp = 0, fp = 0, fn = 0;
                for (const auto& [s, pos] : conv) {
                    bool pred = s > th;
                    if (pred && pos) ++tp;
                    else if (pred) ++fp;
                    else if (pos) ++fn;
                }
                if (tp == 0) return 0.0;
                double p = double(tp) / double(tp + fp);
                double r = double(tp) / double(tp + fn);
                return 2 * p * r / (p + r);
            };
            // independent reconstruction of the candidate set: 0.5 plus the
            // midpoints between consecutive distinct observed scores
            std::vector<double> sorted = all;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            double best = f1_at(0.5);
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
                best = std::max(best, f1_at(0.5 * (sorted[i] + sorted[i + 1])));
            CHECK(choice.f1 == Catch::Approx(best).margin(1e-12));
        }
    }
    SECTION("empty dev set rejected") {
        CHECK_THROWS_AS(tune_threshold_from_scores({}, {}), Error);
    }
}
